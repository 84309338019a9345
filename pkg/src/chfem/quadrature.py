"""Quadrature rules on the reference triangle {(r, s): r, s >= 0, r + s <= 1}.

Weights are normalised to sum to the reference area 1/2.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class TriangleRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,)
    degree: int


# Strang-Fix / Dunavant 6-point rule, exact for degree 4
_A1, _W1 = 0.445948490915964886318329253883, 0.223381589678011465944616961269
_A2, _W2 = 0.091576213509770743459571463402, 0.109951743655321867388716371365


@lru_cache(maxsize=None)
def symmetric_degree4():
    b1 = 1.0 - 2.0 * _A1
    b2 = 1.0 - 2.0 * _A2
    pts = np.array([
        [_A1, _A1], [b1, _A1], [_A1, b1],
        [_A2, _A2], [b2, _A2], [_A2, b2],
    ])
    w = 0.5 * np.array([_W1, _W1, _W1, _W2, _W2, _W2])
    return TriangleRule(pts, w, 4)


@lru_cache(maxsize=None)
def collapsed_gauss(degree):
    """Conical product rule (Gauss-Jacobi x Gauss-Legendre) exact to ``degree``.

    The square [0,1]^2 is collapsed onto the triangle by r = u, s = v (1 - u);
    the Jacobian (1 - u) is absorbed into a Gauss-Jacobi rule in u.
    """
    n = degree // 2 + 1
    xj, wj = roots_jacobi(n, 1.0, 0.0)  # weight (1 - x)
    xl, wl = roots_legendre(n)
    u = 0.5 * (xj + 1.0)
    wu = wj / 4.0  # (1-x) = 2(1-u), dx = 2 du
    v = 0.5 * (xl + 1.0)
    wv = wl / 2.0
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    return TriangleRule(pts, W.ravel(), 2 * n - 1)


def stiffness_rule():
    return symmetric_degree4()


def nonlinear_rule():
    return collapsed_gauss(10)


@lru_cache(maxsize=None)
def gauss_interval(n=3):
    """Gauss-Legendre nodes and weights on [0, 1] (weights sum to 1)."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def monomial_integral(p, q):
    """Exact integral of r^p s^q over the reference triangle: p! q! / (p + q + 2)!."""
    from math import factorial

    return factorial(p) * factorial(q) / factorial(p + q + 2)
