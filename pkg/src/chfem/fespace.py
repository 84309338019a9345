"""Periodic P2 Lagrange space on a uniform mesh.

Global numbering: the ``n^2`` vertex dofs come first (vertex index), then the
``3 n^2`` edge-midpoint dofs (``n^2 + edge index``). Local numbering on a
triangle: vertices 0, 1, 2, then midpoints of edges (0,1), (1,2), (2,0).
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .errors import SpaceNotNested
from .mesh import Mesh


def _barycentric(pts):
    r, s = pts[..., 0], pts[..., 1]
    return 1.0 - r - s, r, s


def reference_basis(pts):
    """Values of the six local basis functions at reference points, shape (..., 6)."""
    L0, L1, L2 = _barycentric(np.asarray(pts, dtype=float))
    return np.stack([
        L0 * (2 * L0 - 1), L1 * (2 * L1 - 1), L2 * (2 * L2 - 1),
        4 * L0 * L1, 4 * L1 * L2, 4 * L2 * L0,
    ], axis=-1)


def reference_gradients(pts):
    """Reference gradients d/dr, d/ds of the basis, shape (..., 6, 2)."""
    L0, L1, L2 = _barycentric(np.asarray(pts, dtype=float))
    dr = np.stack([-(4 * L0 - 1), 4 * L1 - 1, 0 * L2, 4 * (L0 - L1), 4 * L2, -4 * L2], axis=-1)
    ds = np.stack([-(4 * L0 - 1), 0 * L1, 4 * L2 - 1, -4 * L1, 4 * L1, 4 * (L0 - L2)], axis=-1)
    return np.stack([dr, ds], axis=-1)


@dataclass(frozen=True)
class QuadratureData:
    """Basis data of one triangle rule mapped to every element."""

    rule: quadrature.TriangleRule
    values: np.ndarray  # (nq, 6)
    gradients: np.ndarray  # (ne, nq, 6, 2) physical gradients
    weights: np.ndarray  # (ne, nq) physical weights (includes |det J|)
    points: np.ndarray  # (ne, nq, 2) physical points


@dataclass(frozen=True, eq=False)
class FeSpace:
    mesh: Mesh
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    jac_inv_t: np.ndarray = field(repr=False)  # (ne, 2, 2), J^{-T}
    det_j: np.ndarray = field(repr=False)

    @property
    def dof_count(self):
        return self.dof_coords.shape[0]

    @property
    def n(self):
        return self.mesh.n

    @property
    def h(self):
        return self.mesh.h

    def _quad(self, rule):
        vals = reference_basis(rule.points)
        rg = reference_gradients(rule.points)  # (nq, 6, 2)
        grads = np.einsum("eab,qib->eqia", self.jac_inv_t, rg)
        weights = np.abs(self.det_j)[:, None] * rule.weights[None, :]
        c = self.mesh.corners
        pts = (c[:, None, 0, :]
               + rule.points[None, :, 0, None] * (c[:, None, 1, :] - c[:, None, 0, :])
               + rule.points[None, :, 1, None] * (c[:, None, 2, :] - c[:, None, 0, :]))
        return QuadratureData(rule, vals, grads, weights, pts)

    @cached_property
    def quad_stiff(self):
        return self._quad(quadrature.stiffness_rule())

    @cached_property
    def quad_nonlin(self):
        return self._quad(quadrature.nonlinear_rule())

    # -- field helpers -------------------------------------------------
    def values_at_quad(self, coeffs, quad):
        """Field values at quadrature points, shape (ne, nq)."""
        loc = np.asarray(coeffs)[self.cell_dofs]  # (ne, 6)
        return loc @ quad.values.T

    def gradients_at_quad(self, coeffs, quad):
        loc = np.asarray(coeffs)[self.cell_dofs]
        return np.einsum("ei,eqia->eqa", loc, quad.gradients)

    def zero(self):
        return FeField(self, np.zeros(self.dof_count))

    def field(self, coeffs):
        return FeField(self, np.asarray(coeffs, dtype=float).copy())

    def locate(self, points):
        """Containing triangle and reference coordinates for each point (wrapped periodically)."""
        p = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), 1.0)
        n = self.n
        ij = np.minimum(np.floor(p * n).astype(np.int64), n - 1)
        local = p * n - ij
        upper = (local[:, 1] > local[:, 0]).astype(np.int64)
        elem = 2 * (ij[:, 1] * n + ij[:, 0]) + upper
        # unwrap relative to the element's first corner (always the cell's lower-left)
        c0 = self.mesh.corners[elem, 0]
        d = p - c0
        ref = np.einsum("eba,eb->ea", self.jac_inv_t[elem], d)  # J^{-1} d
        return elem, ref

    def basis_at(self, points):
        elem, ref = self.locate(points)
        return elem, reference_basis(ref), reference_gradients(ref)


@dataclass(eq=False)
class FeField:
    space: FeSpace
    coeffs: np.ndarray

    def copy(self):
        return FeField(self.space, self.coeffs.copy())

    def __add__(self, other):
        return FeField(self.space, self.coeffs + _coeffs(other))

    def __sub__(self, other):
        return FeField(self.space, self.coeffs - _coeffs(other))

    def __mul__(self, scalar):
        return FeField(self.space, self.coeffs * float(scalar))

    __rmul__ = __mul__


def _coeffs(x):
    return x.coeffs if isinstance(x, FeField) else x


def build_space(mesh):
    n2 = mesh.n_vertices
    cell_dofs = np.hstack([mesh.triangles, n2 + mesh.triangle_edges])
    dof_coords = np.vstack([mesh.vertices, mesh.edge_midpoints])
    c = mesh.corners
    J = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=-1)  # columns are edge vectors
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    return FeSpace(mesh, cell_dofs, dof_coords, np.transpose(inv, (0, 2, 1)).copy(), det)


def evaluate(fld, points, gradient=False):
    """Point values (and optionally gradients) of a field; points wrap periodically."""
    space = fld.space
    elem, vals, rgrads = space.basis_at(points)
    loc = fld.coeffs[space.cell_dofs[elem]]
    v = np.einsum("pi,pi->p", loc, vals)
    if not gradient:
        return v
    g = np.einsum("pab,pib,pi->pa", space.jac_inv_t[elem], rgrads, loc)
    return v, g


def interpolate(space, g):
    """Nodal interpolant of ``g(x, y)`` (vectorised over arrays)."""
    x, y = space.dof_coords[:, 0], space.dof_coords[:, 1]
    vals = np.broadcast_to(np.asarray(g(x, y), dtype=float), x.shape)
    return FeField(space, np.array(vals))


def prolongation_matrix(coarse, fine):
    """Sparse matrix mapping coarse coefficients to the identical fine function."""
    ratio = fine.n // coarse.n
    if fine.n % coarse.n or ratio < 1 or ratio & (ratio - 1):
        raise SpaceNotNested(f"space with n={fine.n} is not a refinement of n={coarse.n}")
    elem, vals, _ = coarse.basis_at(fine.dof_coords)
    rows = np.repeat(np.arange(fine.dof_count), 6)
    cols = coarse.cell_dofs[elem].ravel()
    data = vals.ravel()
    keep = np.abs(data) > 1e-14
    return sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(fine.dof_count, coarse.dof_count))


def prolong(fld, fine):
    P = prolongation_matrix(fld.space, fine)
    return FeField(fine, P @ fld.coeffs)
