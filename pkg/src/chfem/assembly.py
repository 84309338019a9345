"""Sparse operators and load vectors for the P2 space.

Element blocks are scattered into a fixed CSR pattern with ``np.bincount``
over a precomputed slot map, so the summation order (element order, then
local row, then local column) is the same on every call and results are
bit-reproducible.
"""
import numpy as np
import scipy.sparse as sp

from .model import b_eval, f_eval


class _Pattern:
    def __init__(self, space):
        ne = space.cell_dofs.shape[0]
        rows = np.repeat(space.cell_dofs, 6, axis=1).ravel()
        cols = np.tile(space.cell_dofs, (1, 6)).ravel()
        ndof = space.dof_count
        key = rows * ndof + cols
        uniq, slot = np.unique(key, return_inverse=True)
        self.indptr = np.searchsorted(uniq // ndof, np.arange(ndof + 1)).astype(np.int64)
        self.indices = (uniq % ndof).astype(np.int64)
        self.slot = slot.ravel()
        self.nnz = uniq.size
        self.shape = (ndof, ndof)
        self.ne = ne

    def build(self, local):
        """CSR matrix from element blocks of shape (ne, 6, 6)."""
        data = np.bincount(self.slot, weights=np.ascontiguousarray(local).ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def pattern(space):
    return _cache(space, "pattern", lambda: _Pattern(space))


def assemble_vector(space, local):
    """Global vector from element contributions of shape (ne, 6)."""
    return np.bincount(space.cell_dofs.ravel(), weights=np.ascontiguousarray(local).ravel(),
                       minlength=space.dof_count)


def _cache(space, name, builder):
    cache = space.__dict__.setdefault("_operator_cache", {})
    if name not in cache:
        cache[name] = builder()
    return cache[name]


def mass_matrix(space):
    """Form <u, v>."""
    def build():
        q = space.quad_stiff
        local = np.einsum("eq,qi,qj->eij", q.weights, q.values, q.values)
        return pattern(space).build(local)
    return _cache(space, "mass", build)


def stiffness_matrix(space):
    """Form <grad u, grad v>."""
    def build():
        q = space.quad_stiff
        local = np.einsum("eq,eqia,eqja->eij", q.weights, q.gradients, q.gradients)
        return pattern(space).build(local)
    return _cache(space, "stiffness", build)


def h1_gram(space):
    """Form <grad u, grad v> + <u, v>."""
    return _cache(space, "gram", lambda: (stiffness_matrix(space) + mass_matrix(space)).tocsr())


def _grad_by_basis(space, q):
    # (ne, 6, 2 nq) layout so element blocks are batched matrix products
    cache = space.__dict__.setdefault("_operator_cache", {})
    key = ("gradT", q.rule.degree)
    if key not in cache:
        ne, nq = q.weights.shape
        cache[key] = np.ascontiguousarray(q.gradients.transpose(0, 2, 1, 3).reshape(ne, 6, 2 * nq))
    return cache[key]


def weighted_stiffness_qp(space, weight_qp):
    """Form int w grad u . grad v for a weight given at the nonlinear-rule points (ne, nq)."""
    q = space.quad_nonlin
    G = _grad_by_basis(space, q)
    w = np.repeat(q.weights * weight_qp, 2, axis=1)[:, None, :]
    return pattern(space).build((G * w) @ G.transpose(0, 2, 1))


def weighted_mass_qp(space, weight_qp):
    q = space.quad_nonlin
    V = q.values.T  # (6, nq)
    local = (V[None, :, :] * (q.weights * weight_qp)[:, None, :]) @ q.values
    return pattern(space).build(local)


def load_qp(space, g_qp):
    """Vector int g psi_i for g given at the nonlinear-rule points."""
    q = space.quad_nonlin
    return assemble_vector(space, np.einsum("eq,qi->ei", q.weights * g_qp, q.values))


def grad_load_qp(space, g_qp):
    """Vector int G . grad psi_i for a vector field G at the nonlinear-rule points (ne, nq, 2)."""
    q = space.quad_nonlin
    return assemble_vector(space, np.einsum("eq,eqa,eqia->ei", q.weights, g_qp, q.gradients))


def weighted_stiffness(space, phi, weight):
    """Form int weight(phi) grad u . grad v with the degree-10 rule.

    ``weight`` is a callable acting on arrays, e.g. ``lambda s: b_eval(params, s)``.
    """
    phi_q = space.values_at_quad(_c(phi), space.quad_nonlin)
    return weighted_stiffness_qp(space, weight(phi_q))


def mobility_stiffness(space, phi, params, order=0):
    return weighted_stiffness(space, phi, lambda s: b_eval(params, s, order))


def nonlinear_load(space, phi, params, derivative_order=1):
    """Vector int f^(order)(phi) psi_i with the degree-10 rule."""
    phi_q = space.values_at_quad(_c(phi), space.quad_nonlin)
    return load_qp(space, f_eval(params, phi_q, derivative_order))


def mobility_jacobian_qp(space, weight_qp, mu):
    """Nonsymmetric operator with entries int w psi_j grad(mu) . grad psi_i.

    Used for the derivative of the mobility term with respect to phi.
    """
    q = space.quad_nonlin
    gmu = space.gradients_at_quad(_c(mu), q)  # (ne, nq, 2)
    G = _grad_by_basis(space, q)
    ne, nq = q.weights.shape
    gi = np.einsum("eiqa,eqa->eiq", G.reshape(ne, 6, nq, 2), gmu)  # grad mu . grad psi_i
    local = (gi * (q.weights * weight_qp)[:, None, :]) @ q.values
    return pattern(space).build(local)


def _c(x):
    return getattr(x, "coeffs", x)
