"""Linear backward-Euler SAV scheme for the Cahn-Hilliard equation.

Each step solves two systems with the shared block factorization,

    subsystem 1:  A (phi1, mu1) = (M phi^n, 0)
    subsystem 2:  A (phi2, mu2) = (0, L_b)

with ``L_b`` the load of ``b = F'(phi^n) / sqrt(E(phi^n))``, then recovers
the auxiliary scalar from

    r^{n+1} = (L_b/2 . (phi1 - phi^n) + r^n) / (1 - L_b/2 . phi2)

and recombines ``(phi, mu)^{n+1} = (phi1, mu1) + r^{n+1} (phi2, mu2)``.
Here ``E`` is the potential energy shifted by ``C0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import assembly
from .errors import (
    DegenerateStepError,
    InvalidParameterError,
    NumericalDomainError,
    SavError,
)
from .linsolve import BlockFactorization, build_block_system
from .mesh import Mesh, build_unit_square_mesh

log = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-12


def sine_perturbation(x, y):
    return 0.05 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


@dataclass(frozen=True)
class PotentialSpec:
    """Double well ``F(phi) = (phi^2 - 1)^2 / (4 eps^2)`` with energy shift ``C0``."""

    epsilon: float = 0.1
    C0: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (np.isfinite(self.C0) and self.C0 > 0):
            raise InvalidParameterError(f"C0 must be positive, got {self.C0}")

    def F(self, phi):
        return (phi * phi - 1.0) ** 2 / (4.0 * self.epsilon**2)

    def dF(self, phi):
        return (phi**3 - phi) / self.epsilon**2


@dataclass(frozen=True)
class State:
    t: float
    phi: np.ndarray
    mu: np.ndarray
    r: float


@dataclass(frozen=True)
class SchemeConfig:
    n: int = 16
    dt: float = 1e-3
    T: float = 5.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    spd_tol: float = 1e-13
    cadence: int = 1

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be a positive integer, got {self.n}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.T) and self.T >= self.dt * (1 - 1e-12)):
            raise InvalidParameterError(f"T must be at least dt, got T={self.T}, dt={self.dt}")
        if not self.spd_tol > 0:
            raise InvalidParameterError(f"spd_tol must be positive, got {self.spd_tol}")
        if isinstance(self.cadence, bool) or int(self.cadence) != self.cadence or self.cadence < 1:
            raise InvalidParameterError(f"cadence must be a positive integer, got {self.cadence}")

    @property
    def num_steps(self) -> int:
        return num_steps(self.T, self.dt)


def num_steps(T: float, dt: float) -> int:
    """``ceil(T/dt)``, forgiving ratios that are integers up to roundoff."""
    q = T / dt
    k = round(q)
    return int(k) if abs(q - k) <= 1e-9 * max(1.0, q) else math.ceil(q)


@dataclass
class Operators:
    """Everything a step needs that does not change between steps."""

    mesh: Mesh
    M: object
    K: object
    dt: float
    factorization: BlockFactorization

    @property
    def system(self):
        return self.factorization.system


def build_operators(mesh: Mesh, dt: float) -> Operators:
    M = assembly.assemble_mass(mesh)
    K = assembly.assemble_stiffness(mesh)
    fact = build_block_system(M, K, dt).factorize()
    return Operators(mesh=mesh, M=M, K=K, dt=float(dt), factorization=fact)


def shifted_energy(mesh: Mesh, phi, pot) -> float:
    """``integral of F(phi_h) + C0``."""
    phi_q = assembly.interpolate_at_quadrature(mesh, phi)
    if not np.all(np.isfinite(phi_q)):
        raise NumericalDomainError("non-finite phase field")
    E = assembly.integrate(mesh, pot.F(phi_q)) + pot.C0
    if not np.isfinite(E):
        raise NumericalDomainError("potential energy overflowed")
    return E


def initial_state(mesh: Mesh, config: SchemeConfig, phi0=None, M=None) -> State:
    """Project ``phi0`` (default: the sine-product perturbation) onto P1.

    ``phi0`` may be a callable ``f(x, y)`` or a constant.  ``mu`` starts at
    zero; the scheme never reads it at level 0.
    """
    if phi0 is None:
        phi0 = sine_perturbation
    phi = assembly.l2_project(mesh, phi0, M=M, tol=config.spd_tol)
    r = math.sqrt(shifted_energy(mesh, phi, config.potential))
    return State(t=0.0, phi=phi, mu=np.zeros_like(phi), r=r)


def sav_load(mesh: Mesh, phi, pot) -> np.ndarray:
    """Load vector of ``F'(phi) / sqrt(E(phi))``."""
    sqrtE = math.sqrt(shifted_energy(mesh, phi, pot))
    return assembly.assemble_weighted_load(mesh, lambda _, p: pot.dF(p) / sqrtE, phi)


def sav_step(state: State, ops: Operators, config: SchemeConfig) -> State:
    """Advance one time step of size ``ops.dt``."""
    mesh, M = ops.mesh, ops.M
    N = mesh.num_nodes
    phi_n = state.phi
    if phi_n.shape != (N,):
        raise InvalidParameterError("state does not live on the operator mesh")

    half_load = 0.5 * sav_load(mesh, phi_n, config.potential)

    zeros = np.zeros(N)
    phi1, mu1 = ops.factorization.solve(np.concatenate([M @ phi_n, zeros]))
    phi2, mu2 = ops.factorization.solve(np.concatenate([zeros, 2.0 * half_load]))

    denom = 1.0 - half_load @ phi2
    if abs(denom) < DENOMINATOR_FLOOR:
        raise DegenerateStepError(f"r-update denominator {denom:.3e} is degenerate")
    r_next = (half_load @ (phi1 - phi_n) + state.r) / denom

    phi = phi1 + r_next * phi2
    mu = mu1 + r_next * mu2
    if not (np.isfinite(r_next) and np.all(np.isfinite(phi)) and np.all(np.isfinite(mu))):
        raise NumericalDomainError("non-finite values produced by SAV step")
    return State(t=state.t + ops.dt, phi=phi, mu=mu, r=float(r_next))


def coupled_residual(prev: State, nxt: State, ops: Operators, pot) -> float:
    """Max-norm residual of the coupled linear system at ``nxt``.

    Substitutes the state into the mass balance, the chemical potential
    definition and the scalar equation for r, all driven by ``prev``.
    """
    M, K, dt = ops.M, ops.K, ops.dt
    L = sav_load(ops.mesh, prev.phi, pot)
    r1 = M @ nxt.phi + dt * (K @ nxt.mu) - M @ prev.phi
    r2 = M @ nxt.mu - K @ nxt.phi - nxt.r * L
    r3 = nxt.r - 0.5 * L @ nxt.phi - (prev.r - 0.5 * L @ prev.phi)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2)), abs(r3)))


@dataclass
class RunResult:
    records: list
    final: State
    snapshots: dict
    mesh: Mesh
    operators: Operators


class RunError(SavError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


def snapshot_steps(times: Sequence[float], dt: float, total: int) -> dict:
    """Map each requested time to the step index that reaches it."""
    out = {}
    for t in times:
        k = num_steps(t, dt) if t > 0 else 0
        if k > total:
            raise InvalidParameterError(f"snapshot time {t} lies beyond the final time")
        out[float(t)] = k
    return out


def run(
    config: SchemeConfig,
    phi0=None,
    snapshot_times: Sequence[float] = (),
    mesh: Optional[Mesh] = None,
    callback: Optional[Callable[[int, State, State], None]] = None,
) -> RunResult:
    """Integrate to ``config.T`` and collect diagnostics.

    Records are taken at step 0, every ``config.cadence`` steps, and at the
    final step.  ``callback(k, prev, next)`` is invoked once for the initial
    state (with ``prev=None``) and after every step.
    """
    from .diagnostics import record

    if mesh is None:
        mesh = build_unit_square_mesh(config.n)
    ops = build_operators(mesh, config.dt)
    total = config.num_steps
    wanted = snapshot_steps(snapshot_times, config.dt, total)
    by_step = {}
    for t, k in wanted.items():
        by_step.setdefault(k, []).append(t)

    state = initial_state(mesh, config, phi0, M=ops.M)
    records = [record(ops.M, ops.K, mesh, state, config.potential)]
    snaps = {t: state for t in by_step.get(0, [])}
    if callback is not None:
        callback(0, None, state)
    for k in range(1, total + 1):
        try:
            nxt = sav_step(state, ops, config)
        except SavError as exc:
            raise RunError(k, exc) from exc
        nxt = replace(nxt, t=k * config.dt)
        if callback is not None:
            callback(k, state, nxt)
        state = nxt
        if k % config.cadence == 0 or k == total:
            records.append(record(ops.M, ops.K, mesh, state, config.potential))
        for t in by_step.get(k, []):
            snaps[t] = state
        if k % 1000 == 0:
            log.debug("step %d/%d  t=%.4g  r=%.6g", k, total, state.t, state.r)
    return RunResult(records=records, final=state, snapshots=snaps, mesh=mesh, operators=ops)
