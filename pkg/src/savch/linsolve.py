"""Block system ``[[M, dt K], [-K, M]]`` and its reusable factorization.

Unknowns are ordered phi block first, mu block second.  The first block row
is the discrete mass balance, the second defines the chemical potential.
"""
from __future__ import annotations

import threading

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, NumericalDomainError, SolverError

RESIDUAL_RTOL = 1e-11


class BlockSystem:
    """The constant-coefficient operator shared by every SAV step.

    Attributes ``factorize_count`` and ``solve_count`` record how often the
    operator was factored and how many right-hand sides went through any of
    its factorizations.
    """

    def __init__(self, M, K, dt: float):
        if M.shape != K.shape or M.shape[0] != M.shape[1]:
            raise InvalidParameterError(
                f"mass {M.shape} and stiffness {K.shape} must be equal square shapes"
            )
        dt = float(dt)
        if not np.isfinite(dt) or dt <= 0:
            raise InvalidParameterError(f"dt must be positive, got {dt}")
        self.N = M.shape[0]
        self.dt = dt
        A = sp.bmat([[M, dt * K], [-K, M]], format="csr")
        A.sum_duplicates()
        A.sort_indices()
        self.A = A
        self.factorize_count = 0
        self.solve_count = 0
        self._lock = threading.Lock()

    def factorize(self) -> "BlockFactorization":
        return BlockFactorization(self)


class BlockFactorization:
    """Sparse LU of a :class:`BlockSystem`; solves are serialized."""

    def __init__(self, system: BlockSystem):
        self.system = system
        try:
            # COLAMD ordering is deterministic for a fixed sparsity pattern
            self._lu = spla.splu(system.A.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolverError(f"block factorization failed: {exc}") from exc
        system.factorize_count += 1

    def solve(self, rhs):
        """Solve ``A x = rhs`` and split ``x`` into its (phi, mu) halves."""
        sysm = self.system
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (2 * sysm.N,):
            raise InvalidParameterError(f"rhs must have length {2 * sysm.N}, got {rhs.shape}")
        if not np.all(np.isfinite(rhs)):
            raise NumericalDomainError("non-finite entries in block right-hand side")
        with sysm._lock:
            x = self._lu.solve(rhs)
            sysm.solve_count += 1
        res = np.max(np.abs(sysm.A @ x - rhs)) if rhs.size else 0.0
        bound = RESIDUAL_RTOL * (1.0 + np.max(np.abs(rhs), initial=0.0))
        if not np.isfinite(res) or res > bound:
            raise SolverError(f"block solve residual {res:.3e} exceeds {bound:.3e}")
        return x[: sysm.N], x[sysm.N :]


def build_block_system(M, K, dt: float) -> BlockSystem:
    return BlockSystem(M, K, dt)


def factorize(system: BlockSystem) -> BlockFactorization:
    return system.factorize()


def solve(handle: BlockFactorization, rhs):
    return handle.solve(rhs)


def spd_solve(M, b, tol: float = 1e-13, max_refinements: int = 10) -> np.ndarray:
    """Solve ``M x = b`` for symmetric positive definite ``M``.

    Direct sparse LU followed by iterative refinement until
    ``||M x - b||_2 <= tol * ||b||_2``.
    """
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise NumericalDomainError("non-finite entries in right-hand side")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverError(f"mass factorization failed: {exc}") from exc
    x = lu.solve(b)
    for _ in range(max_refinements + 1):
        r = b - M @ x
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            return x
        x = x + lu.solve(r)
    raise SolverError(
        f"spd_solve did not reach tol {tol:.1e}: residual ratio {rnorm / bnorm:.3e}"
    )
