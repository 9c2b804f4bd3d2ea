"""Command-line front end.

Subcommands ``run``, ``conv-time`` and ``conv-space``.  Configuration comes
from an optional ``key = value`` file (``#`` starts a comment) and is then
overridden by ``--key value`` flags.

Exit codes: 0 success, 1 invalid configuration or I/O failure, 2 solver
failure, 3 convergence rates outside their bands.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import harness, io
from .errors import InvalidParameterError, SavError
from .sav import PotentialSpec, SchemeConfig, run

log = logging.getLogger("savch")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_BANDS = 0, 1, 2, 3


class ConfigError(InvalidParameterError):
    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")
        self.key = key
        self.line = line


def _number(text: str) -> float:
    # accepts 1e-3 as well as 1/1000
    return float(Fraction(text.strip())) if "/" in text else float(text)


def _integer(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _list(conv):
    def parse(text: str):
        return [conv(t) for t in text.replace(";", ",").split(",") if t.strip()]
    return parse


def _band(text: str):
    vals = _list(_number)(text)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise ValueError("expected 'lo, hi' with lo <= hi")
    return tuple(vals)


def _words(text: str):
    return [t.strip() for t in text.split(",") if t.strip()]


# key: (parser, default, help)
SCHEMA = {
    "n": (_integer, 16, "cells per side of the unit square"),
    "dt": (_number, 1e-3, "time step"),
    "T": (_number, 5.0, "final time"),
    "epsilon": (_number, 0.1, "interface width parameter"),
    "C0": (_number, 1.0, "energy shift"),
    "spd_tol": (_number, 1e-13, "relative tolerance of mass-matrix solves"),
    "cadence": (_integer, 1, "steps between trace records"),
    "out": (str, "out", "output directory"),
    "snapshots": (_list(_number), [], "comma-separated snapshot times"),
    "formats": (_words, ["vtk"], "snapshot formats: vtk, csv"),
    "time_n": (_integer, 32, "mesh resolution of the temporal study"),
    "time_dt_ladder": (_list(_number), [1 / 100, 1 / 200, 1 / 400, 1 / 800], "temporal ladder"),
    "time_dt_reference": (_number, 1 / 12800, "reference time step"),
    "time_T": (_number, 0.1, "final time of the temporal study"),
    "time_band": (_band, (0.7, 1.3), "accepted rate band for phi, mu and r"),
    "space_dt": (_number, 2e-5, "time step of the spatial study"),
    "space_n_ladder": (_list(_integer), [4, 8, 16], "spatial ladder"),
    "space_n_reference": (_integer, 64, "reference mesh resolution"),
    "space_T": (_number, 0.01, "final time of the spatial study"),
    "space_band_h1": (_band, (0.7, 1.3), "accepted rate band for phi and mu"),
    "space_band_r": (_band, (1.6, 2.5), "accepted rate band for r"),
}


@dataclass
class RunConfig:
    scheme: SchemeConfig
    out: Path
    snapshots: list
    formats: list
    values: dict = field(default_factory=dict)


def _parse_value(key, text, line=None):
    if key not in SCHEMA:
        raise ConfigError(key, "unknown key", line)
    conv = SCHEMA[key][0]
    try:
        return conv(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(key, f"cannot parse {text!r}: {exc}", line) from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; returns ``{key: (value, line)}``."""
    found = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(line.split()[0], "expected 'key = value'", lineno)
            key, text = (s.strip() for s in line.split("=", 1))
            found[key] = (_parse_value(key, text, lineno), lineno)
    return found


def parse_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Merge defaults, file values and command-line overrides, then validate.

    ``overrides`` maps keys to raw strings (as typed on the command line) or
    to already-parsed values.
    """
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    lines = {}
    if path is not None:
        for key, (v, lineno) in read_config_file(path).items():
            values[key] = v
            lines[key] = lineno
    for key, v in (overrides or {}).items():
        if v is None:
            continue
        values[key] = _parse_value(key, v) if isinstance(v, str) else v
        lines.pop(key, None)
    return _validate(values, lines)


def _validate(values, lines) -> RunConfig:
    def fail(key, msg):
        raise ConfigError(key, msg, lines.get(key))

    for key in ("dt", "T", "epsilon", "C0", "spd_tol", "time_dt_reference", "time_T",
                "space_dt", "space_T"):
        if not values[key] > 0:
            fail(key, f"must be positive, got {values[key]}")
    for key in ("n", "cadence", "time_n", "space_n_reference"):
        if values[key] < 1:
            fail(key, f"must be a positive integer, got {values[key]}")
    if values["T"] < values["dt"]:
        fail("T", "must be at least dt")
    for t in values["snapshots"]:
        if not 0 <= t <= values["T"]:
            fail("snapshots", f"time {t} outside [0, T]")
    for f in values["formats"]:
        if f not in ("vtk", "csv"):
            fail("formats", f"unknown format {f!r}")
    for key in ("time_dt_ladder", "space_n_ladder"):
        if not values[key]:
            fail(key, "ladder is empty")
    ladder = values["time_dt_ladder"]
    if any(abs(a / b - 2) > 1e-12 for a, b in zip(ladder, ladder[1:])):
        fail("time_dt_ladder", "entries must halve from one rung to the next")
    nl = values["space_n_ladder"]
    if any(b != 2 * a for a, b in zip(nl, nl[1:])) or min(nl) < 1:
        fail("space_n_ladder", "entries must double from one rung to the next")
    ratio = values["space_n_reference"] / nl[-1]
    if ratio != int(ratio) or int(ratio) & (int(ratio) - 1):
        fail("space_n_reference", "must be a power-of-two multiple of every ladder entry")

    try:
        pot = PotentialSpec(epsilon=values["epsilon"], C0=values["C0"])
        scheme = SchemeConfig(
            n=values["n"], dt=values["dt"], T=values["T"], potential=pot,
            spd_tol=values["spd_tol"], cadence=values["cadence"],
        )
    except InvalidParameterError as exc:
        raise ConfigError("config", str(exc)) from None
    return RunConfig(
        scheme=scheme, out=Path(values["out"]), snapshots=list(values["snapshots"]),
        formats=list(values["formats"]), values=values,
    )


def _snapshot_name(t: float, fmt: str) -> str:
    return f"phi_t{t:g}.{fmt}"


def cmd_run(config: RunConfig) -> int:
    result = run(config.scheme, snapshot_times=config.snapshots)
    config.out.mkdir(parents=True, exist_ok=True)
    io.write_trace(result.records, config.out / "trace.csv")
    for t, state in sorted(result.snapshots.items()):
        for fmt in config.formats:
            io.write_snapshot(result.mesh, state.phi, config.out / _snapshot_name(t, fmt), fmt)
    sysm = result.operators.system
    log.info(
        "%d steps, %d factorization(s), %d block solves; wrote %s",
        config.scheme.num_steps, sysm.factorize_count, sysm.solve_count, config.out,
    )
    return EXIT_OK


def cmd_convergence(kind: str, config: RunConfig) -> int:
    v = config.values
    pot = config.scheme.potential
    if kind == "temporal":
        report = harness.temporal_study(
            v["time_n"], v["time_dt_ladder"], v["time_dt_reference"], v["time_T"], pot,
            spd_tol=v["spd_tol"],
        )
        bands = (v["time_band"],) * 3
        stem = "conv_time"
    elif kind == "spatial":
        report = harness.spatial_study(
            v["space_dt"], v["space_n_ladder"], v["space_n_reference"], v["space_T"], pot,
            spd_tol=v["spd_tol"],
        )
        bands = (v["space_band_h1"], v["space_band_h1"], v["space_band_r"])
        stem = "conv_space"
    else:
        raise InvalidParameterError(f"unknown study kind {kind!r}")
    config.out.mkdir(parents=True, exist_ok=True)
    (config.out / f"{stem}.csv").write_text(report.to_csv())
    table = report.to_table()
    (config.out / f"{stem}.txt").write_text(table)
    sys.stdout.write(table)
    bad = report.violations(bands)
    for rung, name, rate, (lo, hi) in bad:
        shown = "undefined" if rate is None else f"{rate:.4f}"
        log.warning("rung %d: %s rate %s outside [%g, %g]", rung, name, shown, lo, hi)
    return EXIT_BANDS if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="savch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "integrate one trajectory, write trace.csv and snapshots"),
        ("conv-time", "temporal convergence study"),
        ("conv-space", "spatial convergence study"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        for key, (_, default, h) in SCHEMA.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, metavar="VALUE", default=None,
                           help=f"{h} (default: {default})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {k: getattr(args, k) for k in SCHEMA}
    try:
        config = parse_config(args.config, overrides)
        if args.command == "run":
            return cmd_run(config)
        kind = "temporal" if args.command == "conv-time" else "spatial"
        return cmd_convergence(kind, config)
    except InvalidParameterError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_INVALID
    except SavError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
