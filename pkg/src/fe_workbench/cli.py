"""Command-line entry point: enumerate, verify, integrate and write JSON reports.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure (the report is still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import chains, estimates, flow, renorm_points, regulator, tensors, trees
from .momenta import symmetric_point

log = logging.getLogger("fe_workbench")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def dump(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _write(report: dict, out: str | None, csv_text: str | None = None, csv_path: str | None = None):
    text = dump(report)
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)
    if csv_text is not None and csv_path:
        Path(csv_path).write_text(csv_text)
        log.info("wrote %s", csv_path)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


_TREE_LABELS = {"A": "A", "c": "c", "C": "cb", "g": "gamma", "o": "omega", "b": "beta"}


def _tree_labels(text: str) -> tuple:
    """'AAcc' style strings (chains convention) or comma lists of full names."""
    if "," in text or " " in text:
        return tuple(x for x in text.replace(",", " ").split() if x)
    out = []
    i = 0
    while i < len(text):
        if text[i:i + 2] == "cb":
            out.append("cb")
            i += 2
            continue
        if text[i] not in _TREE_LABELS:
            raise UsageError(f"unknown tree label {text[i]!r}")
        out.append(_TREE_LABELS[text[i]])
        i += 1
    return tuple(out)


# ---------------------------------------------------------------- trees


def cmd_trees(args) -> int:
    if args.action == "enumerate":
        labels = _tree_labels(args.labels)
        found = trees.enumerate_trees(labels, args.stars)
        w = _int_list(args.w) if args.w else None
        items = []
        for t in found:
            d = t.to_dict()
            if w is not None:
                d["thetas"] = [list(tw.theta) for tw in trees.theta_set(t, w)]
            if args.dot:
                d["dot"] = t.to_dot()
            items.append(d)
        report = {"command": "trees enumerate", "labels": list(labels), "star_total": args.stars,
                  "count": len(found), "trees": items}
        if w is not None:
            report["w"] = list(w)
        _write(report, args.out)
        return EXIT_OK
    # verify: weight rule, junction and reduction sweeps
    theta = trees.theta_sweep(3, args.n_max, args.w_max)
    junction = trees.junction_sweep(args.samples, args.seed)
    reduction = trees.reduction_sweep(samples=args.samples, seed=args.seed)
    failed = (len(theta["violations"]) + sum(v["violations"] for v in junction.values())
              + sum(v["violations"] for v in reduction.values()))
    report = {"command": "trees verify", "seed": args.seed, "theta": theta, "junction": junction,
              "reduction": reduction, "passed": failed == 0}
    _write(report, args.out)
    return EXIT_OK if failed == 0 else EXIT_FAILED


# ---------------------------------------------------------------- tensors


def cmd_tensors(args) -> int:
    if args.action == "monomials":
        monos = tensors.enumerate_monomials(args.m, args.r)
        report = {"command": "tensors monomials", "m": args.m, "r": args.r, "count": len(monos),
                  "monomials": [t.to_dict() for t in monos]}
        _write(report, args.out)
        return EXIT_OK
    if args.action == "thresholds":
        res = tensors.threshold_sweep(trials=args.trials, seed=args.seed)
        ok = all(v["misclassified"] == 0 for v in res.values())
        report = {"command": "tensors thresholds", "seed": args.seed, "rank_tol": tensors.RANK_TOL,
                  "results": res, "passed": ok}
    elif args.action == "roundtrip":
        res = tensors.roundtrip_sweep(trials=args.trials, seed=args.seed)
        ok = res["max_residual"] < args.tol
        report = {"command": "tensors roundtrip", "seed": args.seed, "tol": args.tol, "results": res,
                  "passed": ok}
    else:  # covariance
        res = regulator.covariance_sweep(points=args.points, seed=args.seed)
        ok = (res["max_inverse_error"] < args.tol and res["max_q4q5_error"] < args.tol
              and res["min_relative_real_q45"] > 0)
        report = {"command": "tensors covariance", "seed": args.seed, "tol": args.tol, "results": res,
                  "passed": ok}
    _write(report, args.out)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------- estimates


def _sweep_csv(reports) -> str:
    lines = ["case,points,max_ratio,fitted_constant,failures,passed"]
    for r in reports:
        lines.append(f"{r.case},{r.points},{r.max_ratio!r},{r.fitted_constant!r},{len(r.failures)},{r.passed}")
    return "\n".join(lines) + "\n"


def cmd_estimates(args) -> int:
    if args.action == "list":
        cases = [{"id": c.id, "statement": c.statement, "form": c.form,
                  "axes": sorted(c.axes), "paper_constant": c.paper_constant_text}
                 for c in estimates.CASES.values()]
        _write({"command": "estimates list", "count": len(cases), "cases": cases}, args.out)
        return EXIT_OK
    grid = _load_config(args.grid) if args.grid else None
    ids = estimates.CASE_IDS if args.case == "all" else (args.case,)
    if args.case != "all" and args.case not in estimates.CASES:
        raise UsageError(f"unknown case {args.case!r}")
    reports = []
    for cid in ids:
        log.info("verifying %s", cid)
        try:
            if cid == "c16":
                rep = estimates.verify_c16(grid if args.case == "c16" else None, jobs=args.jobs, seed=args.seed)
            else:
                rep = estimates.verify(cid, grid if args.case != "all" else None, jobs=args.jobs)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        reports.append(rep)
    ok = all(r.passed for r in reports)
    report = {"command": "estimates verify", "seed": args.seed, "jobs": args.jobs,
              "cases": [r.to_dict() for r in reports], "passed": ok}
    _write(report, args.out, _sweep_csv(reports), args.csv)
    if args.propagator_csv:
        kinds = {"dS": ("ghost",), "dC": ("gauge",)}.get(args.case, ("ghost", "gauge"))
        rows = regulator.bound_sweep(kinds, seed=args.seed)
        Path(args.propagator_csv).write_text(regulator.sweep_csv(rows))
        log.info("wrote %s", args.propagator_csv)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------- flow and chains


def _schedule(spec) -> list:
    if isinstance(spec, dict) and "logspace" in spec:
        lo, hi, n = spec["logspace"]
        return [float(x) for x in np.geomspace(lo, hi, int(n))]
    if isinstance(spec, (list, tuple)) and spec:
        return [float(x) for x in spec]
    raise UsageError("schedule must be a list or {'logspace': [lo, hi, n]}")


DEFAULT_FLOW = {
    "boundary": "renormalized_at_0",
    "Lam0": 100.0,
    "couplings": {"g4": 1.0},
    "n": 2,
    "hbar": 1.0,
    "schedule": {"logspace": [0.1, 50.0, 12]},
    "momenta": [0.5, 1.0, 2.0, 5.0],
    "bound": {"d": 2, "r": 2},
}


def cmd_flow(args) -> int:
    if args.action == "chains":
        return cmd_chains(args)
    if args.action == "probe":
        res = flow.lam0_uniformity_probe(args.lam, args.P, args.lam0, tol=args.tol)
        _write({"command": "flow probe", **res}, args.out)
        return EXIT_OK if res["passed"] else EXIT_FAILED
    cfg = {**DEFAULT_FLOW, **_load_config(args.config)}
    try:
        sched = _schedule(cfg["schedule"])
        Lam0 = float(cfg["Lam0"])
        n = int(cfg["n"])
        configs = [symmetric_point(n, 1.0, args.seed).scaled(float(s)) for s in cfg["momenta"]]
        table = flow.integrate_flow(cfg["boundary"], sched, cfg["couplings"], Lam0, n=n, configs=configs,
                                    hbar=float(cfg["hbar"]), tol=args.tol)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad flow config: {exc}") from exc
    closed = [flow.integrated_closed(cfg["couplings"], lam, Lam0, cfg["boundary"], n=n, hbar=float(cfg["hbar"]))
              for lam in table.Lams]
    oracle_err = max(abs(v - c) / max(abs(c), 1e-300) for v, c in zip(table.values[:, 0], closed))
    deriv_err = flow.derivative_check(table, tol=args.tol)
    bound = flow.bound_check_thm1(table, int(cfg["bound"]["d"]), int(cfg["bound"]["r"]))
    ok = oracle_err < 1e-8 and deriv_err < 1e-6 and bound.get("feasible", False) \
        and bound.get("shape_consistent", True)
    report = {"command": "flow run", "config": cfg, "seed": args.seed, "table": table.to_dict(),
              "closed_form": closed, "oracle_relative_error": oracle_err,
              "derivative_relative_error": deriv_err, "bound": bound, "passed": bool(ok)}
    _write(report, args.out, table.to_csv(), args.csv)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_chains(args) -> int:
    try:
        found = chains.enumerate_chains(args.external, mode=args.mode, dedup=args.dedup,
                                        max_parts=args.max_parts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = {"command": "chains", "external": list(chains.parse_fields(args.external)), "mode": args.mode,
              "dedup": args.dedup, "count": len(found), "chains": [c.to_dict() for c in found],
              "ghost_balanced": all(chains.ghost_balanced(c) for c in found)}
    _write(report, args.out)
    return EXIT_OK


def cmd_renorm_points(args) -> int:
    if not 0 < args.c < 1:
        raise UsageError("--c must lie in (0, 1)")
    rep = renorm_points.report(c=args.c, seed=args.seed)
    _write({"command": "renorm-points", **rep, "passed": not rep["problems"]}, args.out)
    return EXIT_OK if not rep["problems"] else EXIT_FAILED


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON parameter file")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--tol", type=float, default=1e-10)


def _chain_flags(p: argparse.ArgumentParser):
    p.add_argument("--external", required=True, help="external fields, e.g. AAcc or 'A A c cb'")
    p.add_argument("--mode", choices=("reduced", "division"), default="reduced")
    p.add_argument("--dedup", choices=("presentation", "reversal", "none"), default="presentation")
    p.add_argument("--max-parts", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fe-workbench", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trees", help="weighted-tree enumeration and checks")
    tsub = t.add_subparsers(dest="action", required=True)
    te = tsub.add_parser("enumerate")
    _common(te)
    te.add_argument("--labels", required=True, help="e.g. AAAA, cAAC (C = antighost) or 'c,A,gamma'")
    te.add_argument("--stars", type=int, default=0)
    te.add_argument("--w", help="multi-index, e.g. 0,1,0,0")
    te.add_argument("--dot", action="store_true", help="include Graphviz text")
    tv = tsub.add_parser("verify")
    _common(tv)
    tv.add_argument("--samples", type=int, default=100)
    tv.add_argument("--n-max", type=int, default=6)
    tv.add_argument("--w-max", type=int, default=3)

    x = sub.add_parser("tensors", help="monomial bases, Gram ranks, decomposition, covariance")
    xsub = x.add_subparsers(dest="action", required=True)
    xm = xsub.add_parser("monomials")
    _common(xm)
    xm.add_argument("--m", type=int, required=True)
    xm.add_argument("--r", type=int, required=True)
    for name, default in (("thresholds", 100), ("roundtrip", 500)):
        xp = xsub.add_parser(name)
        _common(xp)
        xp.add_argument("--trials", type=int, default=default)
    xc = xsub.add_parser("covariance")
    _common(xc)
    xc.add_argument("--points", type=int, default=10, help="grid points per axis")

    e = sub.add_parser("estimates", help="inequality sweeps")
    esub = e.add_subparsers(dest="action", required=True)
    ev = esub.add_parser("verify")
    _common(ev)
    ev.add_argument("--case", default="all")
    ev.add_argument("--grid", help="JSON axis overrides for a single case")
    ev.add_argument("--csv", help="also write a CSV summary")
    ev.add_argument("--propagator-csv", help="also write per-point propagator derivative norms against "
                    "w!/(Lam+|p|)^(w+2)")
    el = esub.add_parser("list")
    _common(el)

    f = sub.add_parser("flow", help="one-loop flow and chains")
    fsub = f.add_subparsers(dest="action", required=True)
    fr = fsub.add_parser("run")
    _common(fr)
    fr.add_argument("--csv", help="also write the table as CSV")
    fc = fsub.add_parser("chains")
    _common(fc)
    _chain_flags(fc)
    fp = fsub.add_parser("probe")
    _common(fp)
    fp.add_argument("--lam", type=float, default=1.0)
    fp.add_argument("--P", type=float, default=1.0)
    fp.add_argument("--lam0", type=float, default=10.0)

    c = sub.add_parser("chains", help="chain enumeration")
    _common(c)
    _chain_flags(c)

    r = sub.add_parser("renorm-points", help="renormalization-point table")
    _common(r)
    r.add_argument("--c", type=float, default=0.5,
                   help="eta threshold for realized points: eta > c M (a tool choice, default 0.5)")
    return ap


def _setup_logging():
    level = os.environ.get("FE_WORKBENCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


COMMANDS = {"trees": cmd_trees, "tensors": cmd_tensors, "estimates": cmd_estimates, "flow": cmd_flow,
            "chains": cmd_chains, "renorm-points": cmd_renorm_points}


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.tol <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
