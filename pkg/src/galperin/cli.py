"""Command-line interface: digit tables, traces, audits, error maps, benchmarks.

Exit codes: 0 success, 2 degeneracy or floor ambiguity, 3 step limit,
4 precision cap exhausted.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from gmpy2 import mpq

from . import base_repr, closed_form, dynamics, geometry, invariants
from .model import BilliardSpec, CollisionKind, FieldMode, Termination, Trajectory
from .numeric import (
    Constant,
    Interval,
    PRECISION_CAP,
    PrecisionExhausted,
    is_exact,
    parse_base,
)

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_STEP_LIMIT = 3
EXIT_PRECISION = 4

SCHEMA_VERSION = 1


class OutputFormat(enum.Enum):
    TEXT = "text"
    CSV = "csv"
    JSON = "json"


@dataclass
class RunConfig:
    command: str
    base: object = mpq(10)
    mantissa: object = 1
    field_mode: FieldMode = FieldMode.AUTO
    precision_cap_bits: int = PRECISION_CAP
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.TEXT
    dual: bool = False
    step_limit: Optional[int] = None
    workers: int = 1
    q: Optional[int] = None
    b_range: tuple = (mpq(2), mpq(16), 15)
    n_range: tuple = (mpq(1), mpq(6), 6)


def _parse_mantissa(text: str):
    try:
        return int(text)
    except ValueError:
        return mpq(parse_base(text))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galperin",
        description="Two-ball billiard digit generator and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mantissa_default="1"):
        p.add_argument("--base", default="10",
                       help="base b: integer, decimal, fraction, or phi|e|pi")
        p.add_argument("--mantissa", default=mantissa_default,
                       help="mantissa N (integer; error-map accepts decimals)")
        p.add_argument("--field", choices=[m.value for m in FieldMode], default="auto")
        p.add_argument("--precision-cap", type=int, default=PRECISION_CAP,
                       metavar="BITS", help="interval precision cap in bits")
        p.add_argument("--format", choices=[f.value for f in OutputFormat],
                       default="text")
        p.add_argument("--out", default=None, help="write output to this path")

    p = sub.add_parser("digits", help="one row of the digit table for (b, N)")
    common(p)
    p.add_argument("--dual", action="store_true",
                   help="also print the golden-base Type II form")

    p = sub.add_parser("simulate", help="run the event simulation, print a summary")
    common(p)
    p.add_argument("--step-limit", type=int, default=None)

    p = sub.add_parser("trace", help="full event stream as CSV or JSON")
    common(p)
    p.add_argument("--step-limit", type=int, default=None)

    p = sub.add_parser("check", help="invariant and geometry audits on one run")
    common(p)
    p.add_argument("--q", type=int, default=None,
                   help="audit a superintegrable run with m/M = tan^2(pi/q)")

    p = sub.add_parser("error-map", help="systematic-error grid over (b, N)")
    p.add_argument("--b-min", default="1.1")
    p.add_argument("--b-max", default="16")
    p.add_argument("--b-steps", type=int, default=60)
    p.add_argument("--n-min", default="0")
    p.add_argument("--n-max", default="5")
    p.add_argument("--n-steps", type=int, default=26)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--precision-cap", type=int, default=4096, metavar="BITS")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", help="simulation vs closed-form count timing")
    common(p, mantissa_default="6")
    p.add_argument("--step-limit", type=int, default=None)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if hasattr(args, "base"):
        cfg.base = parse_base(args.base)
        cfg.mantissa = _parse_mantissa(args.mantissa)
        cfg.field_mode = FieldMode(args.field)
    if hasattr(args, "precision_cap"):
        cfg.precision_cap_bits = args.precision_cap
    if hasattr(args, "format"):
        cfg.format = OutputFormat(args.format)
    if hasattr(args, "out"):
        cfg.output = args.out
    cfg.dual = getattr(args, "dual", False)
    cfg.step_limit = getattr(args, "step_limit", None)
    cfg.workers = getattr(args, "workers", 1)
    cfg.q = getattr(args, "q", None)
    if args.command == "error-map":
        cfg.b_range = (parse_base(args.b_min), parse_base(args.b_max), args.b_steps)
        cfg.n_range = (parse_base(args.n_min), parse_base(args.n_max), args.n_steps)
    return cfg


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _machine_reason(kind: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"schema": SCHEMA_VERSION, "reason": kind, "detail": detail}) + "\n")


def _spec_from(cfg: RunConfig) -> BilliardSpec:
    return BilliardSpec(
        base=cfg.base,
        mantissa=cfg.mantissa,
        field_mode=cfg.field_mode,
        precision_cap_bits=cfg.precision_cap_bits,
    )


# -- value serialization -----------------------------------------------------


def _scalar_str(x, digits: int = 20) -> str:
    if x is None:
        return ""
    if is_exact(x):
        return str(mpq(x))
    if isinstance(x, Interval):
        return f"{x.mid():.{digits}g}"
    return str(x)


def _scalar_json(x):
    if x is None:
        return None
    if is_exact(x):
        return str(mpq(x))
    if isinstance(x, Interval):
        return {"mid": f"{x.mid():.30g}", "rad": f"{x.width():.6g}"}
    return str(x)


# -- digits ------------------------------------------------------------------


def cmd_digits(cfg: RunConfig) -> int:
    b, N = cfg.base, cfg.mantissa
    degenerate = None
    if not isinstance(N, int) or N < 0:
        _machine_reason("invalid-mantissa", "digits needs an integer N >= 0")
        return EXIT_DEGENERATE
    try:
        if N == 0:
            raise closed_form.SubmultipleDegeneracy(formula_count=4, certified=True)
        total = closed_form.count_collisions_exact(b, N, cfg.precision_cap_bits)
        epsilon = total - closed_form.count_collisions_approx(b, N, cfg.precision_cap_bits)
    except closed_form.SubmultipleDegeneracy as exc:
        if exc.formula_count is None:
            _machine_reason("degenerate", str(exc))
            return EXIT_DEGENERATE
        degenerate = exc
        total = exc.formula_count
        epsilon = total - closed_form.count_collisions_approx(b, max(N, 0), cfg.precision_cap_bits) if N else 1
    except PrecisionExhausted as exc:
        _machine_reason("precision-exhausted", str(exc))
        return EXIT_PRECISION

    try:
        count_exp = base_repr.expand_count(total, b, cfg.precision_cap_bits)
    except base_repr.FloorAmbiguity as exc:
        _machine_reason("floor-ambiguity", str(exc))
        return EXIT_DEGENERATE
    shifted = count_exp.shifted(N)
    integer_base = is_exact(b) and mpq(b).denominator == 1
    point = not integer_base
    pi_b_str = count_exp.to_string(trailing_point=point)
    shifted_str = shifted.to_string(trailing_point=point and N == 0)
    row = {
        "N": N,
        "collisions": str(total),
        "collisions_base_b": pi_b_str,
        "digits": shifted_str,
        "epsilon": epsilon,
        "error": base_repr.error_string(b, N),
        "degenerate": degenerate is not None,
    }
    if cfg.dual:
        if not (isinstance(cfg.base, Constant) and cfg.base.name == "phi"):
            _machine_reason("dual-form-unavailable", "--dual applies to the golden base only")
            return EXIT_DEGENERATE
        try:
            one, two = base_repr.golden_dual_forms(total, N, shift=N,
                                                   cap_bits=cfg.precision_cap_bits)
            row["digits"] = one.to_string(trailing_point=N == 0)
            row["digits_type2"] = two.to_string(trailing_point=N == 0)
        except ValueError as exc:
            _machine_reason("dual-form-unavailable", str(exc))
            return EXIT_DEGENERATE

    if cfg.format is OutputFormat.JSON:
        _emit(cfg, json.dumps({"schema": SCHEMA_VERSION, **row}) + "\n")
    elif cfg.format is OutputFormat.CSV:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        _emit(cfg, buf.getvalue())
    else:
        cells = [row["collisions"]]
        if row["collisions_base_b"] != row["collisions"]:
            cells.append(row["collisions_base_b"])
        cells.append(row["digits"])
        if "digits_type2" in row:
            cells.append(row["digits_type2"])
        cells.append(row["error"])
        if row["degenerate"]:
            cells.append("[degenerate: physical count is one less]")
        if epsilon:
            cells.append(f"[epsilon={epsilon}]")
        _emit(cfg, " | ".join(cells) + "\n")
    if degenerate is not None:
        _machine_reason("degenerate", str(degenerate))
        return EXIT_DEGENERATE
    return EXIT_OK


# -- simulate / trace --------------------------------------------------------


def _run_simulation(cfg: RunConfig) -> Trajectory:
    spec = _spec_from(cfg)
    return dynamics.simulate(spec, step_limit=cfg.step_limit)


def _trace_rows(traj: Trajectory):
    for e in traj.events:
        st = e.state_after
        yield {
            "n": e.index,
            "kind": e.kind.value,
            "t": _scalar_str(st.t),
            "X": _scalar_str(st.X),
            "x": _scalar_str(st.x),
            "V": _scalar_str(st.V),
            "v": _scalar_str(st.v),
        }


def trace_json_payload(traj: Trajectory) -> dict:
    events = []
    for e in traj.events:
        st = e.state_after
        events.append({
            "n": e.index,
            "kind": e.kind.value,
            "t": _scalar_json(st.t),
            "X": _scalar_json(st.X),
            "x": _scalar_json(st.x),
            "V": _scalar_json(st.V),
            "v": _scalar_json(st.v),
            "dt": _scalar_json(e.dt_since_previous),
        })
    return {
        "schema": SCHEMA_VERSION,
        "spec": traj.spec.describe(),
        "termination": traj.termination.value,
        "n_collisions": traj.n_collisions,
        "precision_bits": traj.precision_bits,
        "events": events,
    }


def load_trace(path: str):
    """Reload a JSON trace; rational values come back bit-exact."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema") != SCHEMA_VERSION:
        raise ValueError("unknown trace schema")
    events = []
    for row in payload["events"]:
        events.append({
            "n": row["n"],
            "kind": row["kind"],
            **{k: (mpq(row[k]) if isinstance(row[k], str) else row[k])
               for k in ("t", "X", "x", "V", "v", "dt")},
        })
    return payload, events


def cmd_trace(cfg: RunConfig) -> int:
    traj = _run_simulation(cfg)
    if cfg.format is OutputFormat.JSON:
        _emit(cfg, json.dumps(trace_json_payload(traj)) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["n", "kind", "t", "X", "x", "V", "v"],
                                lineterminator="\n")
        writer.writeheader()
        for row in _trace_rows(traj):
            writer.writerow(row)
        _emit(cfg, buf.getvalue())
    return EXIT_STEP_LIMIT if traj.termination is Termination.STEP_LIMIT else EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    start = time.perf_counter()
    traj = _run_simulation(cfg)
    elapsed = time.perf_counter() - start
    summary = {
        "schema": SCHEMA_VERSION,
        "spec": traj.spec.describe(),
        "n_collisions": traj.n_collisions,
        "termination": traj.termination.value,
        "final_state": {k: _scalar_json(getattr(traj.final_state, k))
                        for k in ("t", "X", "x", "V", "v")},
        "precision_bits": traj.precision_bits,
        "elapsed_seconds": round(elapsed, 6),
    }
    if cfg.format is OutputFormat.JSON:
        _emit(cfg, json.dumps(summary) + "\n")
    else:
        _emit(cfg, (
            f"collisions: {traj.n_collisions}\n"
            f"termination: {traj.termination.value}\n"
            f"final V: {_scalar_str(traj.final_state.V)}\n"
            f"final v: {_scalar_str(traj.final_state.v)}\n"
            f"elapsed: {elapsed:.3f}s\n"
        ))
    return EXIT_STEP_LIMIT if traj.termination is Termination.STEP_LIMIT else EXIT_OK


# -- check -------------------------------------------------------------------


def cmd_check(cfg: RunConfig) -> int:
    if cfg.q is not None:
        spec = invariants.superintegrable_spec(cfg.q)
        traj = dynamics.simulate(spec, step_limit=cfg.step_limit)
        report = invariants.audit_trajectory(traj, q=cfg.q)
    else:
        traj = _run_simulation(cfg)
        report = invariants.audit_trajectory(traj)
    geo = geometry.geometry_report(traj)
    lines = []
    failed = False
    for name, drift in report.max_drift.items():
        zero = invariants._is_zero(drift)
        failed = failed or not zero
        lines.append(f"{'PASS' if zero else 'FAIL'} {name}: max drift {_scalar_str(drift)}")
    distinct = len({str(v) for v in report.pseudo_average_position})
    pseudo_varies = distinct > 1 or len(report.pseudo_average_position) < 2
    lines.append(
        f"{'PASS' if pseudo_varies else 'FAIL'} averaged-position pseudo-invariant varies "
        f"({distinct} distinct values)"
    )
    failed = failed or not pseudo_varies
    lines.append(f"INFO min|X| observed {geo.x_min_observed:.6g} predicted {geo.x_min_predicted:.6g}")
    lines.append(f"INFO max|v| observed {geo.v_max_observed:.6g} predicted {geo.v_max_predicted:.6g}")
    lines.append(f"INFO ellipse residual BW {_scalar_str(geo.ellipse_bw_residual)} BB {_scalar_str(geo.ellipse_bb_residual)}")
    lines.append(f"INFO hyperbola residual BW {_scalar_str(geo.hyperbola_bw_residual)} BB {_scalar_str(geo.hyperbola_bb_residual)}")
    if cfg.format is OutputFormat.JSON:
        payload = {
            "schema": SCHEMA_VERSION,
            "spec": traj.spec.describe(),
            "drifts": {k: _scalar_str(v) for k, v in report.max_drift.items()},
            "pseudo_invariant_distinct": distinct,
            "geometry": {
                "x_min_observed": geo.x_min_observed,
                "x_min_predicted": geo.x_min_predicted,
                "v_max_observed": geo.v_max_observed,
                "v_max_predicted": geo.v_max_predicted,
                "ellipse_bw_residual": _scalar_str(geo.ellipse_bw_residual),
                "hyperbola_bw_residual": _scalar_str(geo.hyperbola_bw_residual),
            },
            "ok": not failed,
        }
        _emit(cfg, json.dumps(payload) + "\n")
    else:
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK if not failed else 1


# -- error map ---------------------------------------------------------------


def _cell_args(cfg: RunConfig):
    b_lo, b_hi, b_steps = cfg.b_range
    n_lo, n_hi, n_steps = cfg.n_range
    bs = base_repr.grid_values(b_lo, b_hi, b_steps)
    ns = base_repr.grid_values(n_lo, n_hi, n_steps)
    return [(b, N, cfg.precision_cap_bits) for b in bs for N in ns]


def _cell_worker(args):
    b, N, cap = args
    cell = base_repr.error_cell(b, N, cap)
    return str(cell.b), str(cell.N), cell.epsilon


def cmd_error_map(cfg: RunConfig) -> int:
    jobs = _cell_args(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_cell_worker, jobs, chunksize=16))
    else:
        results = [_cell_worker(j) for j in jobs]
    ambiguous = [r for r in results if r[2] < 0]
    if cfg.format is OutputFormat.JSON:
        payload = {
            "schema": SCHEMA_VERSION,
            "cells": [{"b": b, "N": n, "epsilon": e} for b, n, e in results],
            "ambiguous": len(ambiguous),
        }
        _emit(cfg, json.dumps(payload) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["b", "N", "epsilon"])
        writer.writerows(results)
        _emit(cfg, buf.getvalue())
    if ambiguous and cfg.output:
        with open(cfg.output + ".ambiguous.txt", "w") as fh:
            for b, n, _ in ambiguous:
                fh.write(f"{b},{n}\n")
    return EXIT_OK


# -- bench -------------------------------------------------------------------


def cmd_bench(cfg: RunConfig) -> int:
    spec = _spec_from(cfg)
    t0 = time.perf_counter()
    count_sim, termination = dynamics.count_collisions_simulated(spec, step_limit=cfg.step_limit)
    sim_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        count_cf = closed_form.count_collisions_exact(cfg.base, cfg.mantissa,
                                                      cfg.precision_cap_bits)
    except closed_form.SubmultipleDegeneracy as exc:
        count_cf = exc.formula_count
    cf_s = time.perf_counter() - t0
    payload = {
        "schema": SCHEMA_VERSION,
        "base": str(cfg.base),
        "mantissa": str(cfg.mantissa),
        "simulated_count": count_sim,
        "simulated_termination": termination.value,
        "closed_form_count": count_cf,
        "match": count_sim == count_cf,
        "simulate_seconds": round(sim_s, 6),
        "closed_form_seconds": round(cf_s, 6),
        "seconds_per_collision": round(sim_s / max(count_sim, 1), 9),
    }
    _emit(cfg, json.dumps(payload) + "\n")
    if termination is Termination.STEP_LIMIT:
        return EXIT_STEP_LIMIT
    return EXIT_OK if payload["match"] else 1


COMMANDS = {
    "digits": cmd_digits,
    "simulate": cmd_simulate,
    "trace": cmd_trace,
    "check": cmd_check,
    "error-map": cmd_error_map,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        return COMMANDS[cfg.command](cfg)
    except PrecisionExhausted as exc:
        _machine_reason("precision-exhausted", str(exc))
        return EXIT_PRECISION
    except closed_form.SubmultipleDegeneracy as exc:
        _machine_reason("degenerate", str(exc))
        return EXIT_DEGENERATE
    except base_repr.FloorAmbiguity as exc:
        _machine_reason("floor-ambiguity", str(exc))
        return EXIT_DEGENERATE
    except ValueError as exc:
        _machine_reason("invalid-config", str(exc))
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
