"""Scalar functionals of SAV states and the discrete norms used in studies."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assembly
from .errors import InvalidParameterError


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy_original: float
    energy_modified: float
    r: float
    grad_mu_sq: float

    FIELDS = ("t", "mass", "energy_original", "energy_modified", "r", "grad_mu_sq")

    def as_tuple(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


def mass(M, phi) -> float:
    return float(np.sum(M @ np.asarray(phi, dtype=float)))


def seminorm_sq(K, v) -> float:
    """``v^T K v``."""
    v = np.asarray(v, dtype=float)
    return float(v @ (K @ v))


def energies(M, K, phi, r, pot, mesh):
    """Return ``(original, modified)``.

    original = 1/2 |phi|_K^2 + integral F(phi_h), no C0 shift;
    modified = 1/2 |phi|_K^2 + r^2.
    """
    grad = 0.5 * seminorm_sq(K, phi)
    phi_q = assembly.interpolate_at_quadrature(mesh, phi)
    potential = assembly.integrate(mesh, pot.F(phi_q))
    return grad + potential, grad + r * r


def modified_energy(K, phi, r) -> float:
    return 0.5 * seminorm_sq(K, phi) + r * r


def energy_identity_residual(prev, nxt, K, dt) -> float:
    """Left-hand side minus right-hand side of the per-step dissipation law."""
    if prev.phi.shape != nxt.phi.shape:
        raise InvalidParameterError("states live on different meshes")
    dphi = nxt.phi - prev.phi
    dr = nxt.r - prev.r
    return (
        modified_energy(K, nxt.phi, nxt.r)
        - modified_energy(K, prev.phi, prev.r)
        + 0.5 * seminorm_sq(K, dphi)
        + dr * dr
        + dt * seminorm_sq(K, nxt.mu)
    )


def norm_l2(M, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ (M @ v), 0.0)))


def norm_h1(M, K, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ (M @ v) + v @ (K @ v), 0.0)))


def composite_norms(h1_errors, r_errors, dt):
    """Reduce per-record errors to ``(sup_h1, l2_in_time_h1, sup_abs_r)``.

    ``h1_errors`` are H1 norms of the field error at each record time and
    ``r_errors`` the matching signed or absolute r errors.
    """
    e = np.asarray(h1_errors, dtype=float)
    er = np.abs(np.asarray(r_errors, dtype=float))
    if e.size == 0:
        raise InvalidParameterError("empty error series")
    return float(e.max()), float(np.sqrt(dt * np.sum(e * e))), float(er.max(initial=0.0))


def record(M, K, mesh, state, pot) -> DiagnosticsRecord:
    original, modified = energies(M, K, state.phi, state.r, pot, mesh)
    return DiagnosticsRecord(
        t=float(state.t),
        mass=mass(M, state.phi),
        energy_original=original,
        energy_modified=modified,
        r=float(state.r),
        grad_mu_sq=seminorm_sq(K, state.mu),
    )
