"""P1 finite-element operators on a :class:`~savch.mesh.Mesh`.

Matrices are returned as ``scipy.sparse.csr_matrix`` with sorted indices and
no explicit duplicates.  Nonlinear terms are integrated at the points of the
degree-4 rule in :mod:`savch.quadrature`, using the P1 interpolant of the
nodal field.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .errors import InvalidParameterError, NumericalDomainError
from .mesh import Mesh

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Sum per-element 3x3 blocks into a global CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    N = mesh.num_nodes
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def local_mass(area: float) -> np.ndarray:
    return area * _LOCAL_MASS


def local_stiffness(area: float, grads) -> np.ndarray:
    g = np.asarray(grads)
    return area * g @ g.T


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """Consistent mass matrix ``M_ij = (phi_i, phi_j)``."""
    local = mesh.areas[:, None, None] * _LOCAL_MASS[None]
    return _scatter(mesh, local)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Stiffness matrix ``K_ij = (grad phi_i, grad phi_j)``."""
    g = mesh.gradients
    local = mesh.areas[:, None, None] * np.einsum("eid,ejd->eij", g, g)
    return _scatter(mesh, local)


def quadrature_points(mesh: Mesh) -> np.ndarray:
    """Physical quadrature points, shape (num_triangles, 6, 2)."""
    verts = mesh.nodes[mesh.triangles]  # (E, 3, 2)
    return np.einsum("qk,ekd->eqd", quadrature.BARYCENTRIC, verts)


def interpolate_at_quadrature(mesh: Mesh, phi) -> np.ndarray:
    """Values of the P1 function with nodal values ``phi``, shape (E, 6)."""
    phi = _check_nodal(mesh, phi)
    return phi[mesh.triangles] @ quadrature.BARYCENTRIC.T


def integrate(mesh: Mesh, values_at_qp) -> float:
    """Integral over the domain of a function sampled at quadrature points."""
    w = mesh.areas[:, None] * quadrature.WEIGHTS[None, :]
    return float(np.sum(w * values_at_qp))


def assemble_weighted_load(mesh: Mesh, g, phi=None) -> np.ndarray:
    """Load vector ``L_i = integral of g(x, phi_h(x)) * phi_i(x)``.

    ``g`` is called as ``g(points, phi_q)`` with ``points`` of shape (E, 6, 2)
    and ``phi_q`` of shape (E, 6) (zeros when ``phi`` is omitted) and must
    return an array broadcastable to (E, 6).  An array of that shape may be
    passed instead of a callable.
    """
    if callable(g):
        phi_q = (
            interpolate_at_quadrature(mesh, phi)
            if phi is not None
            else np.zeros((mesh.num_triangles, quadrature.WEIGHTS.size))
        )
        vals = g(quadrature_points(mesh), phi_q)
    else:
        vals = g
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (mesh.num_triangles, quadrature.WEIGHTS.size))
    bad = ~np.isfinite(vals)
    if bad.any():
        e = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise NumericalDomainError(f"non-finite integrand on triangle {e}")
    # (E, q) * (q, 3) -> (E, 3)
    local = (vals * quadrature.WEIGHTS[None, :]) @ quadrature.BARYCENTRIC
    local *= mesh.areas[:, None]
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)


def l2_project(mesh: Mesh, f, M=None, tol: float = 1e-13) -> np.ndarray:
    """L2 projection of the pointwise function ``f(x, y)`` onto P1.

    ``f`` may also be a scalar constant.
    """
    from .linsolve import spd_solve

    if M is None:
        M = assemble_mass(mesh)
    if callable(f):
        rhs = assemble_weighted_load(mesh, lambda pts, _: f(pts[..., 0], pts[..., 1]))
    else:
        rhs = float(f) * np.asarray(M.sum(axis=1)).ravel()
    return spd_solve(M, rhs, tol)


def _check_nodal(mesh: Mesh, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (mesh.num_nodes,):
        raise InvalidParameterError(
            f"nodal vector has shape {v.shape}, mesh has {mesh.num_nodes} nodes"
        )
    return v
