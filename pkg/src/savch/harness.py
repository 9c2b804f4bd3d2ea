"""Temporal and spatial convergence studies against a fine reference run."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import assembly, diagnostics
from .errors import InvalidParameterError
from .mesh import build_unit_square_mesh, inject
from .sav import PotentialSpec, SchemeConfig, run

CSV_COLUMNS = ("param", "e_phi", "rate_phi", "e_mu", "rate_mu", "e_r", "rate_r")


def compute_rate(e_coarse: float, e_fine: float) -> float:
    """Observed order ``log2(e_coarse / e_fine)`` for a halved parameter."""
    if not (e_coarse > 0 and e_fine > 0):
        raise InvalidParameterError(
            f"rate undefined for non-positive errors ({e_coarse!r}, {e_fine!r})"
        )
    return math.log2(e_coarse / e_fine)


def _rate_or_none(a, b):
    try:
        return compute_rate(a, b)
    except InvalidParameterError:
        return None


@dataclass
class ConvergenceReport:
    kind: str  # "temporal" or "spatial"
    ladder: list
    errors: list  # (e_phi_sup_h1, e_mu_sup_h1, e_r_sup) per rung
    reference: dict = field(default_factory=dict)
    errors_l2_time: list = field(default_factory=list)  # (phi, mu) l2-in-time H1

    @property
    def rates(self) -> list:
        """Per-rung-pair rates ``(phi, mu, r)``; ``None`` where undefined."""
        return [
            tuple(_rate_or_none(a, b) for a, b in zip(coarse, fine))
            for coarse, fine in zip(self.errors, self.errors[1:])
        ]

    def violations(self, bands) -> list:
        """Rates outside ``bands = (phi_band, mu_band, r_band)``.

        Each band is ``(lo, hi)``.  Undefined rates count as violations.
        """
        out = []
        for i, rates in enumerate(self.rates):
            for name, rate, (lo, hi) in zip(("phi", "mu", "r"), rates, bands):
                if rate is None or not lo <= rate <= hi:
                    out.append((i + 1, name, rate, (lo, hi)))
        return out

    def rows(self):
        rates = [(None, None, None)] + self.rates
        for p, e, q in zip(self.ladder, self.errors, rates):
            yield p, e[0], q[0], e[1], q[1], e[2], q[2]

    def to_csv(self) -> str:
        def fmt(v):
            return "" if v is None else format(v, ".17g")

        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows():
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def to_table(self) -> str:
        label = "dt" if self.kind == "temporal" else "h"
        head = [label, "|e_phi|_inf,1", "Rate", "|e_mu|_inf,1", "Rate", "|e_r|_inf", "Rate"]
        body = []
        for p, ep, rp, em, rm, er, rr in self.rows():
            body.append(
                [_param_str(p), f"{ep:.5e}", _rate_str(rp), f"{em:.5e}", _rate_str(rm),
                 f"{er:.5e}", _rate_str(rr)]
            )
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(head, widths))]
        lines.append("-" * len(lines[0]))
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
        return "\n".join(lines) + "\n"


def _param_str(p):
    inv = 1.0 / p
    if abs(inv - round(inv)) < 1e-9 * inv:
        return f"1/{round(inv)}"
    return f"{p:.6g}"


def _rate_str(r):
    return "--" if r is None else f"{r:.4f}"


def _int_ratio(a: float, b: float, what: str) -> int:
    k = round(a / b)
    if k < 1 or abs(a / b - k) > 1e-9 * max(1.0, a / b):
        raise InvalidParameterError(f"{what}: {a} is not an integer multiple of {b}")
    return int(k)


def _check_halving(values: Sequence[float], what: str):
    for a, b in zip(values, values[1:]):
        if abs(a / b - 2.0) > 1e-12:
            raise InvalidParameterError(f"{what} must shrink by exactly a factor of 2 per rung")


def _field_errors(M, K, phi, mu, r, ref):
    rphi, rmu, rr = ref
    return (
        diagnostics.norm_h1(M, K, phi - rphi),
        diagnostics.norm_h1(M, K, mu - rmu),
        r - rr,
    )


def _collect_errors(config, reference_at, stride, mesh):
    """Run one rung and compare every step with ``reference_at(k * stride)``."""
    M = assembly.assemble_mass(mesh)
    K = assembly.assemble_stiffness(mesh)
    errs = []

    def compare(k, _prev, state):
        errs.append(_field_errors(M, K, state.phi, state.mu, state.r, reference_at(k * stride)))

    run(_with_cadence(config), mesh=mesh, callback=compare)
    e = np.array(errs)
    phi_sup, phi_l2, r_sup = diagnostics.composite_norms(e[:, 0], e[:, 2], config.dt)
    mu_sup, mu_l2, _ = diagnostics.composite_norms(e[:, 1], e[:, 2], config.dt)
    return (phi_sup, mu_sup, r_sup), (phi_l2, mu_l2)


def _with_cadence(config: SchemeConfig) -> SchemeConfig:
    return replace(config, cadence=config.num_steps)


def temporal_study(
    n_fixed: int,
    dt_ladder: Sequence[float],
    dt_reference: float,
    T: float,
    pot: Optional[PotentialSpec] = None,
    spd_tol: float = 1e-13,
) -> ConvergenceReport:
    """Errors of a time-step ladder against a fine-``dt`` run on one mesh."""
    pot = pot or PotentialSpec()
    dt_ladder = [float(d) for d in dt_ladder]
    if not dt_ladder:
        raise InvalidParameterError("empty dt ladder")
    _check_halving(dt_ladder, "dt ladder")
    ratios = [_int_ratio(d, dt_reference, "dt_reference must divide every ladder dt") for d in dt_ladder]
    for d in dt_ladder:
        _int_ratio(T, d, "every ladder dt must divide T")
    _int_ratio(T, dt_reference, "dt_reference must divide T")

    mesh = build_unit_square_mesh(n_fixed)
    stride = min(ratios)
    saved = {}

    def keep(k, _prev, state):
        if k % stride == 0:
            saved[k] = (state.phi, state.mu, state.r)

    ref_cfg = SchemeConfig(n=n_fixed, dt=dt_reference, T=T, potential=pot, spd_tol=spd_tol)
    run(_with_cadence(ref_cfg), mesh=mesh, callback=keep)

    errors, errors_l2 = [], []
    for d, ratio in zip(dt_ladder, ratios):
        cfg = SchemeConfig(n=n_fixed, dt=d, T=T, potential=pot, spd_tol=spd_tol)
        sup, l2 = _collect_errors(cfg, saved.__getitem__, ratio, mesh)
        errors.append(sup)
        errors_l2.append(l2)
    return ConvergenceReport(
        kind="temporal",
        ladder=dt_ladder,
        errors=errors,
        errors_l2_time=errors_l2,
        reference={"n": n_fixed, "dt": dt_reference, "T": T,
                   "epsilon": pot.epsilon, "C0": pot.C0},
    )


def spatial_study(
    dt_fixed: float,
    n_ladder: Sequence[int],
    n_reference: int,
    T: float,
    pot: Optional[PotentialSpec] = None,
    spd_tol: float = 1e-13,
) -> ConvergenceReport:
    """Errors of a mesh ladder against a fine-mesh run with the same ``dt``.

    The reference is injected onto the coarse nodes; norms are taken on the
    coarse mesh.
    """
    pot = pot or PotentialSpec()
    n_ladder = [int(n) for n in n_ladder]
    if not n_ladder:
        raise InvalidParameterError("empty mesh ladder")
    _check_halving([1.0 / n for n in n_ladder], "h ladder")
    ref_mesh = build_unit_square_mesh(n_reference)
    meshes = [build_unit_square_mesh(n) for n in n_ladder]
    for m in meshes:
        inject(ref_mesh, np.zeros(ref_mesh.num_nodes), m)  # validates nesting
    _int_ratio(T, dt_fixed, "dt must divide T")

    saved = [dict() for _ in meshes]

    def keep(k, _prev, state):
        for m, store in zip(meshes, saved):
            store[k] = (inject(ref_mesh, state.phi, m), inject(ref_mesh, state.mu, m), state.r)

    ref_cfg = SchemeConfig(n=n_reference, dt=dt_fixed, T=T, potential=pot, spd_tol=spd_tol)
    run(_with_cadence(ref_cfg), mesh=ref_mesh, callback=keep)

    errors, errors_l2 = [], []
    for m, store in zip(meshes, saved):
        cfg = SchemeConfig(n=m.n, dt=dt_fixed, T=T, potential=pot, spd_tol=spd_tol)
        sup, l2 = _collect_errors(cfg, store.__getitem__, 1, m)
        errors.append(sup)
        errors_l2.append(l2)
    return ConvergenceReport(
        kind="spatial",
        ladder=[1.0 / n for n in n_ladder],
        errors=errors,
        errors_l2_time=errors_l2,
        reference={"n": n_reference, "dt": dt_fixed, "T": T,
                   "epsilon": pot.epsilon, "C0": pot.C0},
    )
