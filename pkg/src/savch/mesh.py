"""Uniform P1 triangulations of the unit square.

Nodes are numbered row-major: node ``(i, j)`` sits at ``(i/n, j/n)`` and has
index ``j*(n+1) + i``.  Every grid cell is cut along the diagonal from its
bottom-left to its top-right corner, so ``mesh(n)`` is nested in
``mesh(2n)``: coarse node ``(i, j)`` coincides with fine node ``(2i, 2j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation of ``[0, 1]^2``.

    Attributes
    ----------
    n : int
        Cells per side.
    nodes : ndarray, shape (N, 2)
    triangles : ndarray, shape (2 n^2, 3)
        Counterclockwise node indices.
    """

    n: int
    nodes: np.ndarray
    triangles: np.ndarray
    _areas: np.ndarray = field(repr=False)
    _grads: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def areas(self) -> np.ndarray:
        return self._areas

    @property
    def gradients(self) -> np.ndarray:
        """Basis-function gradients, shape (num_triangles, 3, 2)."""
        return self._grads

    def node_index(self, i: int, j: int) -> int:
        return j * (self.n + 1) + i


def triangle_geometry(vertices):
    """Area and P1 basis gradients for triangles given by vertex coordinates.

    ``vertices`` has shape (..., 3, 2).  Returns ``(area, grads)`` with
    ``grads[..., k, :]`` the gradient of the barycentric coordinate attached
    to vertex ``k``.  Area is signed: positive for counterclockwise input.
    """
    v = np.asarray(vertices, dtype=float)
    x, y = v[..., 0], v[..., 1]
    # cyclic differences: b_k = y_{k+1} - y_{k+2}, c_k = x_{k+2} - x_{k+1}
    b = np.roll(y, -1, axis=-1) - np.roll(y, -2, axis=-1)
    c = np.roll(x, -2, axis=-1) - np.roll(x, -1, axis=-1)
    det = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (
        x[..., 2] - x[..., 0]
    ) * (y[..., 1] - y[..., 0])
    grads = np.stack([b, c], axis=-1) / det[..., None, None]
    return 0.5 * det, grads


def build_unit_square_mesh(n: int) -> Mesh:
    """Build the uniform ``n x n`` triangulation of the unit square."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidParameterError(f"mesh resolution must be a positive integer, got {n!r}")
    n = int(n)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    nodes = np.column_stack([ii.ravel() / n, jj.ravel() / n])

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    a = (cj * (n + 1) + ci).ravel()  # bottom-left
    b = a + 1                        # bottom-right
    c = a + n + 2                    # top-right
    d = a + n + 1                    # top-left
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    areas, grads = triangle_geometry(nodes[triangles])
    nodes.setflags(write=False)
    triangles.setflags(write=False)
    areas.setflags(write=False)
    grads.setflags(write=False)
    return Mesh(n=n, nodes=nodes, triangles=triangles, _areas=areas, _grads=grads)


def element_geometry(mesh: Mesh, e: int):
    """Return ``(area, gradients)`` for triangle ``e`` of ``mesh``."""
    if isinstance(e, bool) or int(e) != e or not 0 <= e < mesh.num_triangles:
        raise IndexError(f"triangle index {e!r} out of range [0, {mesh.num_triangles})")
    return float(mesh.areas[e]), mesh.gradients[e].copy()


def _refinement_factor(coarse: Mesh, fine: Mesh) -> int:
    ratio, rem = divmod(fine.n, coarse.n)
    if rem or ratio < 1 or ratio & (ratio - 1):
        raise InvalidParameterError(
            f"mesh({fine.n}) is not a power-of-two refinement of mesh({coarse.n})"
        )
    return ratio


def coarse_node_indices(coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Indices into ``fine`` of the nodes shared with ``coarse``."""
    k = _refinement_factor(coarse, fine)
    ii, jj = np.meshgrid(np.arange(coarse.n + 1), np.arange(coarse.n + 1), indexing="xy")
    return (k * jj * (fine.n + 1) + k * ii).ravel()


def inject(fine: Mesh, values, coarse: Mesh) -> np.ndarray:
    """Restrict a nodal function on ``fine`` to the nodes of ``coarse``."""
    values = np.asarray(values)
    if values.shape[0] != fine.num_nodes:
        raise InvalidParameterError("nodal vector does not match the fine mesh")
    return values[coarse_node_indices(coarse, fine)].copy()


def prolong(coarse: Mesh, values, fine: Mesh) -> np.ndarray:
    """Evaluate a coarse P1 function at the nodes of a nested finer mesh."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != coarse.num_nodes:
        raise InvalidParameterError("nodal vector does not match the coarse mesh")
    k = _refinement_factor(coarse, fine)
    I, J = np.meshgrid(np.arange(fine.n + 1), np.arange(fine.n + 1), indexing="xy")
    I, J = I.ravel(), J.ravel()
    i = np.minimum(I // k, coarse.n - 1)
    j = np.minimum(J // k, coarse.n - 1)
    out = _eval_cells(coarse.n, values, i, j, (I - k * i) / k, (J - k * j) / k)
    out[coarse_node_indices(coarse, fine)] = values
    return out


def evaluate_p1(mesh: Mesh, values, points) -> np.ndarray:
    """Evaluate the P1 interpolant with nodal ``values`` at ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = mesh.n
    s = np.clip(pts[:, 0] * n, 0.0, n)
    t = np.clip(pts[:, 1] * n, 0.0, n)
    i = np.minimum(np.floor(s).astype(np.int64), n - 1)
    j = np.minimum(np.floor(t).astype(np.int64), n - 1)
    return _eval_cells(n, np.asarray(values, dtype=float), i, j, s - i, t - j)


def _eval_cells(n, v, i, j, fx, fy):
    a = j * (n + 1) + i
    va, vb, vc, vd = v[a], v[a + 1], v[a + n + 2], v[a + n + 1]
    # lower triangle (a, b, c) when fx >= fy, upper (a, c, d) otherwise
    return np.where(
        fx >= fy,
        va + fx * (vb - va) + fy * (vc - vb),
        va + fx * (vc - vd) + fy * (vd - va),
    )
