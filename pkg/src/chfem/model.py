"""Double-well potential, concentration dependent mobility and derived constants.

Both coefficient functions are polynomials stored in ascending monomial
order, so every derivative is again a polynomial and evaluation is exact
up to round-off.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import MobilityNotBoundedBelow, NonPositiveGamma, PotentialUnboundedBelow, ValidationError

DEFAULT_RANGE = 4.0
_N_SAMPLES = 10_001


def factored_quartic(a, c):
    """Coefficients of ``c (s - a)^2 (s + a)^2`` in ascending order."""
    return (c * a**4, 0.0, -2.0 * c * a**2, 0.0, c)


@dataclass(frozen=True)
class ModelParams:
    """Validated model data. Build instances with :func:`validate`."""

    gamma: float
    f_coeffs: tuple
    b_coeffs: tuple
    b_floor: float
    admissible_range: float
    f1: float
    alpha: float
    b_bounds: tuple
    # suprema over the admissible range; stored, never used by the solver
    b_derivative_bounds: tuple = field(default=(0.0, 0.0))

    def f(self, s, order=0):
        return f_eval(self, s, order)

    def b(self, s, order=0):
        return b_eval(self, s, order)

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "f": {"coeffs": list(self.f_coeffs)},
            "mobility": {"coeffs": list(self.b_coeffs), "floor": self.b_floor},
            "admissible_range": self.admissible_range,
        }


def _derivative(coeffs, order):
    c = np.asarray(coeffs, dtype=float)
    if order:
        c = P.polyder(c, order)
    return c


def f_eval(params, s, order=0):
    """Evaluate ``f`` or one of its derivatives (``order`` in 0..4)."""
    if not 0 <= order <= 4:
        raise ValueError(f"derivative order must be in 0..4, got {order}")
    return P.polyval(s, _derivative(params.f_coeffs, order))


def b_eval(params, s, order=0):
    """Evaluate the mobility or one of its derivatives (``order`` in 0..2)."""
    if not 0 <= order <= 2:
        raise ValueError(f"derivative order must be in 0..2, got {order}")
    val = P.polyval(s, _derivative(params.b_coeffs, order))
    if order == 0:
        val = val + params.b_floor
    return val


def _min_on_interval(coeffs, lo, hi):
    """Minimum of a polynomial on [lo, hi] from its critical points."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size == 0:
        return 0.0
    cand = [lo, hi]
    if c.size > 2:
        for r in P.polyroots(P.polyder(c)):
            if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                cand.append(r.real)
    return float(min(P.polyval(np.array(cand), c)))


def _max_abs_on_interval(coeffs, lo, hi):
    c = np.asarray(coeffs, dtype=float)
    return max(abs(_min_on_interval(c, lo, hi)), abs(_min_on_interval(-c, lo, hi)))


def _global_min_second_derivative(f_coeffs):
    c0, c1, c2, c3, c4 = f_coeffs
    if c4 > 0:
        # f'' = 12 c4 s^2 + 6 c3 s + 2 c2, a convex parabola
        s = -6.0 * c3 / (24.0 * c4)
        return 12.0 * c4 * s * s + 6.0 * c3 * s + 2.0 * c2
    return 2.0 * c2


def validate(gamma, f_coeffs=None, b_coeffs=(1.0, 0.0, -2.0, 0.0, 1.0), b_floor=1e-3,
             admissible_range=DEFAULT_RANGE, f_factored=None):
    """Check the model assumptions and compute ``f1``, ``alpha`` and mobility bounds.

    Parameters
    ----------
    gamma : float
        Interface parameter, must be positive.
    f_coeffs : sequence of 5 floats, optional
        Ascending monomial coefficients ``c0..c4`` of the quartic potential.
    b_coeffs : sequence of floats
        Ascending coefficients of the polynomial part of the mobility.
    b_floor : float
        Nonnegative constant added to the mobility polynomial.
    admissible_range : float
        Half-width ``A`` of the interval ``[-A, A]`` on which the mobility and
        potential bounds are certified.
    f_factored : (a, c), optional
        Alternative to ``f_coeffs``: ``f(s) = c (s - a)^2 (s + a)^2``.

    Raises
    ------
    NonPositiveGamma, MobilityNotBoundedBelow, PotentialUnboundedBelow, ValidationError
    """
    if isinstance(gamma, ModelParams):
        p = gamma
        return validate(p.gamma, p.f_coeffs, p.b_coeffs, p.b_floor, p.admissible_range)
    gamma = float(gamma)
    if not gamma > 0:
        raise NonPositiveGamma(gamma)
    if f_factored is not None:
        if f_coeffs is not None:
            raise ValidationError("f", "give either f.coeffs or f.factored, not both")
        a, c = f_factored
        f_coeffs = factored_quartic(float(a), float(c))
    if f_coeffs is None:
        raise ValidationError("f", "potential coefficients are required")
    f_coeffs = tuple(float(c) for c in f_coeffs)
    if len(f_coeffs) != 5:
        raise ValidationError("f.coeffs", f"expected 5 coefficients c0..c4, got {len(f_coeffs)}")
    b_coeffs = tuple(float(c) for c in b_coeffs)
    if not b_coeffs:
        raise ValidationError("mobility.coeffs", "mobility polynomial needs at least one coefficient")
    b_floor = float(b_floor)
    if b_floor < 0:
        raise ValidationError("mobility.floor", "mobility floor must be nonnegative")
    A = float(admissible_range)
    if not A > 0:
        raise ValidationError("admissible_range", "admissible range must be positive")

    c0, c1, c2, c3, c4 = f_coeffs
    if c4 < 0:
        raise PotentialUnboundedBelow("negative leading coefficient")
    if c4 == 0 and (c3 != 0 or c2 < 0 or (c2 == 0 and c1 != 0)):
        raise PotentialUnboundedBelow("degenerate quartic without convex growth")

    fpp_min = _global_min_second_derivative(f_coeffs)
    f_min = _min_on_interval(f_coeffs, -A, A)
    f1 = max(0.0, -fpp_min, -f_min)
    alpha = max(gamma, gamma + f1)

    b_poly = np.array(b_coeffs)
    b_min = _min_on_interval(b_poly, -A, A) + b_floor
    if not b_min > 0:
        raise MobilityNotBoundedBelow(b_min)
    b_max = -_min_on_interval(-b_poly, -A, A) + b_floor
    b3 = _max_abs_on_interval(_derivative(b_poly, 1), -A, A)
    b4 = _max_abs_on_interval(_derivative(b_poly, 2), -A, A)
    return ModelParams(
        gamma=gamma, f_coeffs=f_coeffs, b_coeffs=b_coeffs, b_floor=b_floor,
        admissible_range=A, f1=f1, alpha=alpha, b_bounds=(b_min, b_max),
        b_derivative_bounds=(b3, b4),
    )


def benchmark_model(admissible_range=DEFAULT_RANGE):
    """gamma = 0.003, f = 0.3 (s^2 - 0.99^2)^2, b = (1 - s^2)^2 + 1e-3."""
    return validate(0.003, f_factored=(0.99, 0.3), b_coeffs=(1.0, 0.0, -2.0, 0.0, 1.0),
                    b_floor=1e-3, admissible_range=admissible_range)


def sample_bounds(params, n=_N_SAMPLES):
    """Brute-force extrema of b, f and f'' on the admissible range (diagnostic)."""
    s = np.linspace(-params.admissible_range, params.admissible_range, n)
    b = b_eval(params, s)
    return {
        "b_min": float(b.min()), "b_max": float(b.max()),
        "f_min": float(f_eval(params, s).min()), "fpp_min": float(f_eval(params, s, 2).min()),
    }
