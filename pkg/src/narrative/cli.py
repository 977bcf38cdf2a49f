"""Command-line front end.

    narrative <command> --scenario <path|bundled-name> --out <dir>
              [--tol X] [--max-iter N] [--seed N] [--exact]

Exit status: 0 success, 1 verification failure, 2 parse error, 3 validation
error, 4 refusal (hypothesis not met), 5 numeric failure, 6 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dynamics, export, graph, stochastic
from .errors import NarrativeError, OracleLimitError, RefusalError, ValidationError
from .means import check_mean_property
from .scenario import COMMANDS, Scenario, bundled_names, load


def _labels(g: graph.DiGraph, vs) -> list[str]:
    return [g.label(v) for v in sorted(vs)]


def _floats(x) -> list[float]:
    return [float(v) for v in x]


def cmd_analyze(sc: Scenario, out: Path, args) -> dict:
    g = sc.graph
    rep = graph.root(g)
    cond = graph.strongly_connected_components(g)
    (out / "graph.dot").write_text(export.graph_dot(g), encoding="utf-8")
    (out / "condensation.dot").write_text(export.condensation_dot(g), encoding="utf-8")
    (out / "root.dot").write_text(export.root_dot(g), encoding="utf-8")
    report = {
        "vertices": g.vertex_count,
        "sccs": [_labels(g, c) for c in cond.scc_members],
        "condensation_edges": sorted([a + 1, b + 1] for a, b in cond.quotient.edges),
        "root": _labels(g, rep.root),
        "components": [_labels(g, c) for c in rep.components],
        "is_irreducible": rep.is_irreducible,
        "period": rep.period,
        "is_ergodic": rep.is_ergodic,
        "rank": {g.label(v): r for v, r in graph.rank_levels(g).items()},
    }
    if rep.is_ergodic:
        report["root_walk_length_threshold"] = graph.walk_length_threshold(rep.root_graph)
    try:
        report["root_characterization_holds"] = graph.verify_root_characterization(g)
    except OracleLimitError:
        report["root_characterization_holds"] = None
    return report


def _vectors(sc: Scenario) -> list:
    if not sc.initial_vectors:
        raise ValidationError("scenario has no initial_vectors")
    return sc.initial_vectors


def cmd_simulate(sc: Scenario, out: Path, args) -> dict:
    sys_ = sc.require_system()
    runs = []
    for k, x0 in enumerate(_vectors(sc), 1):
        trace = dynamics.iterate(sys_, x0, args.tol, args.max_iter)
        (out / f"trace_{k}.csv").write_text(trace.to_csv(), encoding="utf-8")
        v = trace.verdict
        low, up = dynamics.limsup_liminf(trace, min(dynamics.TAIL, len(trace.tail)))
        entry = {"start": _floats(x0), "verdict": v.kind, "iterations": v.iterations,
                 "summary": v.summary(), "L": _floats(low), "U": _floats(up)}
        if v.kind == "converged":
            entry["limit"] = v.limit
        if v.kind == "oscillating":
            entry["period"] = v.period
        if v.vector is not None:
            entry["final"] = _floats(v.vector)
        runs.append(entry)
    return {"runs": runs}


def cmd_invariant(sc: Scenario, out: Path, args) -> dict:
    sys_ = sc.require_system()
    low, high = sc.sample_range or (None, None)
    rows = []
    for x0 in _vectors(sc):
        k = dynamics.estimate_invariant_mean(sys_, x0, args.tol, args.max_iter)
        dev = dynamics.root_only_dependence(sys_, x0, 20, args.seed, low, high, args.tol)
        rows.append({"start": _floats(x0), "estimate": k, "root_only_max_change": dev})
    return {"root": [i + 1 for i in sys_.root_report.root_order], "estimates": rows}


def cmd_witness(sc: Scenario, out: Path, args) -> dict:
    sys_ = sc.require_system()
    gamma, delta = sc.witness_values()
    w = dynamics.nonuniqueness_witness(sys_, gamma, delta, args.tol)
    return {"gamma": gamma, "delta": delta, "witness": w.to_dict()}


def cmd_limit(sc: Scenario, out: Path, args) -> dict:
    sys_ = sc.require_system()
    # rational weights get the exact treatment without asking
    exact = args.exact or all(getattr(m, "exact", True) for m in sys_.means)
    a = stochastic.to_matrix(sys_, exact=exact)
    lim = stochastic.limit_matrix(a, args.tol)
    (out / "matrix.csv").write_text(export.matrix_csv(a.entries), encoding="utf-8")
    report = {"exact": exact}
    if exact:
        (out / "limit_exact.csv").write_text(export.matrix_csv(lim), encoding="utf-8")
        report["limit_exact"] = [[str(v) for v in row] for row in lim]
        lim = np.array([[float(v) for v in row] for row in lim])
    (out / "limit.csv").write_text(export.matrix_csv(lim), encoding="utf-8")
    squared = stochastic.limit_by_squaring(a)
    report["limit"] = [_floats(r) for r in lim]
    report["squaring_max_difference"] = float(np.max(np.abs(squared - lim)))
    return report


def cmd_verify(sc: Scenario, out: Path, args) -> dict:
    sys_ = sc.require_system()
    low, high = sc.sample_range or (None, None)
    checks = []

    def record(name, ok, **detail):
        checks.append({"name": name, "ok": bool(ok), **detail})

    g = sys_.incidence
    rep = sys_.root_report
    if g.vertex_count <= 12:
        record("root characterization", graph.verify_root_characterization(g))
    record("no edge enters the root from outside",
           not any(u not in rep.root and v in rep.root for u, v in g.edges))
    lo, hi = sys_.domain.sample_bounds() if low is None else (low, high)
    for i, m in enumerate(sys_.means):
        audit = check_mean_property(m, 1000, (lo, hi), args.seed + i)
        strict = m.flags().strict
        record(f"mean property node {i + 1}", audit.mean_violations == 0 and (not strict or audit.strict_violations == 0),
               mean_violations=audit.mean_violations, strict_violations=audit.strict_violations)
    if rep.is_ergodic:
        for x0 in sc.initial_vectors:
            dev = dynamics.root_only_dependence(sys_, x0, 20, args.seed, low, high, args.tol)
            record("root-only dependence", dev < 1e-9, start=_floats(x0), max_change=dev)
        for r in (dynamics.verify_invariance(sys_, 100, args.seed, low, high, tol=args.tol),
                  dynamics.verify_monotonicity(sys_, 20, args.seed, low, high, tol=args.tol),
                  dynamics.verify_homogeneity(sys_, 20, args.seed, low, high, tol=args.tol)):
            record(r.name, r.ok, applicable=r.applicable, max_error=r.max_error, threshold=r.threshold)
    else:
        gamma, delta = sc.witness_values()
        w = dynamics.nonuniqueness_witness(sys_, gamma, delta, args.tol)
        record("non-uniqueness witness", w.certified, kind=w.kind)
    if sys_.is_affine:
        a = stochastic.to_matrix(sys_)
        try:
            lim = stochastic.limit_matrix(a)
        except RefusalError as exc:
            record("matrix limit", True, skipped=str(exc))
        else:
            diff = float(np.max(np.abs(stochastic.limit_by_squaring(a) - lim)))
            record("structural limit vs repeated squaring", diff < 1e-10, max_difference=diff)
            for x0 in sc.initial_vectors:
                v = dynamics.iterate(sys_, x0, args.tol, args.max_iter).verdict
                err = float(np.max(np.abs(v.vector - lim @ np.asarray(x0))))
                record("iteration limit vs L x0", err < 1e-9, start=_floats(x0), max_difference=err)
    return {"checks": checks, "all_ok": all(c["ok"] for c in checks)}


HANDLERS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "invariant": cmd_invariant,
    "witness": cmd_witness,
    "limit": cmd_limit,
    "verify": cmd_verify,
}


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="narrative", description="Invariant means on directed networks.")
    ap.add_argument("command", choices=COMMANDS + ("list",))
    ap.add_argument("--scenario", help="scenario file or bundled name")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--max-iter", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--exact", action="store_true", help="require rational arithmetic for matrix limits")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "list":
        print("\n".join(bundled_names()))
        return 0
    if not args.scenario:
        ap.error("--scenario is required")
    try:
        sc = load(args.scenario)
        args.tol = sc.tol if args.tol is None else args.tol
        args.max_iter = sc.max_iter if args.max_iter is None else args.max_iter
        if not args.tol > 0 or args.max_iter < 1:
            raise ValidationError("--tol must be positive and --max-iter at least 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = {"scenario": sc.name, "command": args.command,
                  **HANDLERS[args.command](sc, out, args)}
    except NarrativeError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    (out / f"{args.command}_report.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if args.command == "verify" and not report["all_ok"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
