"""Command-line entry point.

Every subcommand prints one JSON run report (see ``report-schema``) and
exits 0 when all claims pass, 1 when any claim fails, 2 on usage or config
errors and 3 when a budget cut a run short.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .constructions import REGISTRY, ConstructionError, verify
from .extremal_search import SearchError, SearchProblem, max_noncovering, shen_variant, threshold_certificate
from .prime_tools import (
    PrimeSubset,
    SieveBudgetError,
    cached_sieve,
    density_series,
    density_summary,
    progression_filter,
    rep_count_profile,
    three_prime_witness,
    write_density_csv,
)
from .q_construction import (
    GROWTH_NOTE,
    ScheduleError,
    build_layers,
    check_nesting,
    check_odd_identity,
    fact1_series,
    ledger_conservation,
    load_schedule_config,
    make_schedule,
    pruning_residuals,
    verify_fact2,
    write_checkpoint_csv,
    write_ledger_csv,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCOMPLETE = 0, 1, 2, 3
SCHEMA_VERSION = "1"
BUDGETS = {"tiny": 10, "small": 10_000, "default": 5_000_000, "large": 100_000_000}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "primesums run report",
    "type": "object",
    "required": ["schema_version", "tool", "version", "command", "parameters", "claims", "summary", "notes", "timing"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"const": "primesums"},
        "version": {"type": "string"},
        "command": {"type": "string"},
        "parameters": {"type": "object"},
        "claims": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "status", "detail", "witness"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "status": {"enum": ["pass", "fail", "incomplete"]},
                    "detail": {"type": "string"},
                    "witness": {},
                },
            },
        },
        "summary": {
            "type": "object",
            "required": ["pass", "fail", "incomplete"],
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("pass", "fail", "incomplete")},
        },
        "notes": {"type": "array", "items": {"type": "string"}},
        "timing": {"type": "object", "required": ["seconds"], "properties": {"seconds": {"type": "number"}}},
    },
}


class UsageError(Exception):
    pass


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class RunReport:
    def __init__(self, command: str, parameters: dict[str, Any]):
        self.command = command
        self.parameters = parameters
        self.claims: list[dict[str, Any]] = []
        self.notes: list[str] = []
        self._t0 = time.perf_counter()

    def add(self, cid: str, status: str, detail: str = "", witness: Any = None) -> None:
        if any(c["id"] == cid for c in self.claims):
            raise ValueError(f"duplicate claim id {cid}")
        self.claims.append({"id": cid, "status": status, "detail": detail, "witness": jsonable(witness)})

    def check(self, cid: str, ok: bool, detail: str = "", witness: Any = None) -> None:
        self.add(cid, "pass" if ok else "fail", detail, None if ok else witness)

    def summary(self) -> dict[str, int]:
        return {s: sum(c["status"] == s for c in self.claims) for s in ("pass", "fail", "incomplete")}

    def exit_code(self) -> int:
        s = self.summary()
        if s["fail"]:
            return EXIT_FAIL
        if s["incomplete"]:
            return EXIT_INCOMPLETE
        return EXIT_PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": "primesums",
            "version": __version__,
            "command": self.command,
            "parameters": jsonable(self.parameters),
            "claims": self.claims,
            "summary": self.summary(),
            "notes": self.notes,
            "timing": {"seconds": round(time.perf_counter() - self._t0, 6)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _budget(text: str) -> int:
    if text in BUDGETS:
        return BUDGETS[text]
    try:
        n = int(text)
    except ValueError as exc:
        raise UsageError(f"budget must be an integer or one of {sorted(BUDGETS)}") from exc
    if n < 1:
        raise UsageError("budget must be positive")
    return n


def cmd_verify(args) -> RunReport:
    if args.name not in REGISTRY:
        raise UsageError(f"unknown construction {args.name!r}; known: {', '.join(REGISTRY)}")
    params = {}
    if args.name in ("problem66a", "problem66b"):
        if args.p is None:
            raise UsageError(f"{args.name} needs --p")
        params["p"] = args.p
    elif args.name == "doubling":
        if args.k is None:
            raise UsageError("doubling needs --k")
        params["k"] = args.k
    report = RunReport("verify", {"name": args.name, **params})
    try:
        c = REGISTRY[args.name](**params)
    except ConstructionError as exc:
        raise UsageError(str(exc)) from exc
    vr = verify(c)
    report.parameters["modulus"] = vr.modulus
    for r in vr.results:
        report.add(f"{c.name}:{r.id}", r.status, r.detail, r.witness)
    return report


def cmd_search(args) -> RunReport:
    budget = _budget(args.budget)
    params = {"m": args.m, "h": args.h, "target": args.target, "universe": args.universe,
              "budget": budget, "max_seconds": args.max_seconds, "min_size": args.min_size}
    report = RunReport("search", params)
    try:
        problem = SearchProblem(args.m, args.h, args.universe, args.target, args.min_size, budget, args.max_seconds)
        res = max_noncovering(problem, workers=args.workers)
    except SearchError as exc:
        raise UsageError(str(exc)) from exc
    payload = {"max_size": res.max_size, "witnesses": [list(w) for w in res.witnesses],
               "orbits_explored": res.orbits_explored, "pruned": res.pruned}
    if res.complete:
        report.add("max-noncovering", "pass", f"max non-covering size {res.max_size}", payload)
    else:
        report.add("max-noncovering", "incomplete", "budget exhausted before the search finished", payload)
    if args.certificate:
        try:
            cert = threshold_certificate(args.m, max_nodes=budget, max_seconds=args.max_seconds, workers=args.workers)
        except SearchError as exc:
            raise UsageError(str(exc)) from exc
        detail = (f"every subset of size >= {cert.threshold_size} of Z_{args.m}* has A+A+A = Z_{args.m}; "
                  f"boundary size {cert.boundary_size} attained: {cert.boundary_attained}")
        witness = {"counterexample": cert.counterexample, "boundary_witnesses": cert.boundary_witnesses,
                   "orbits_checked": cert.orbits_checked, "vacuous": cert.vacuous}
        if not cert.complete:
            report.add("five-eighths-certificate", "incomplete", detail, witness)
        else:
            report.check("five-eighths-certificate", cert.passed, detail, witness)
    return report


def cmd_shen(args) -> RunReport:
    sizes = tuple(_int_list(args.sizes))
    if len(sizes) != 3:
        raise UsageError("--sizes needs three integers")
    report = RunReport("shen", {"m": args.m, "sizes": list(sizes), "budget": _budget(args.budget)})
    try:
        rep = shen_variant(args.m, sizes, max_m=args.max_m, max_nodes=_budget(args.budget))
    except SearchError as exc:
        raise UsageError(str(exc)) from exc
    outcome = "pass" if rep.passed else "fail"
    detail = (f"A1+A2+A3 = Z_{args.m} over all unit subsets of sizes {sizes}: {outcome} "
              f"(sizes {'meet' if rep.in_hypothesis else 'miss'} the 5/8 hypothesis)")
    if not rep.complete:
        report.add("three-set-cover", "incomplete", detail, {"triples_checked": rep.triples_checked})
    else:
        w = None
        if rep.witness:
            A1, A2, A3, miss = rep.witness
            w = {"A1": A1, "A2": A2, "A3": A3, "missed": miss}
        expected = rep.in_hypothesis if args.expect is None else args.expect == "pass"
        report.add("three-set-cover", "pass" if rep.passed == expected else "fail",
                   detail + f", expected {'pass' if expected else 'fail'}", w)
        report.notes.append(f"triples checked: {rep.triples_checked}")
    return report


def _subset(args, table) -> tuple[PrimeSubset, str]:
    if args.classes == "all":
        return PrimeSubset.all(table), "all"
    if args.mod is None:
        raise UsageError("--mod is required unless --classes all")
    cls = _int_list(args.classes) if args.classes else []
    return progression_filter(table, args.mod, cls), f"{cls} mod {args.mod}"


def cmd_density(args) -> RunReport:
    cps = _int_list(args.checkpoints) if args.checkpoints else [args.limit]
    if max(cps) > args.limit:
        raise UsageError(f"checkpoint {max(cps)} exceeds --limit {args.limit}")
    if min(cps) < 2:
        raise UsageError("checkpoints must be >= 2")
    report = RunReport("density", {"mod": args.mod, "classes": args.classes, "limit": args.limit, "checkpoints": cps})
    try:
        table = cached_sieve(args.limit)
    except SieveBudgetError as exc:
        raise UsageError(str(exc)) from exc
    S, label = _subset(args, table)
    pts = density_series(S, cps)
    if args.csv:
        write_density_csv(pts, args.csv)
    summ = density_summary(pts)
    report.add("density-series", "pass", f"relative density of primes in {label}",
               {"summary": summ, "points": [[p.x, p.count, p.value] for p in pts]})
    x = cps[-1]
    pi = table.count(x)
    ratio = pts[-1].count / pi if pi else 0.0
    if args.expect_ratio is not None:
        report.check("ratio-to-all-primes", abs(ratio - args.expect_ratio) <= args.tolerance,
                     f"S({x})/pi({x}) = {ratio:.6f}, expected {args.expect_ratio} +- {args.tolerance}",
                     {"ratio": ratio})
    else:
        report.notes.append(f"S({x})/pi({x}) = {ratio:.6f}")
    return report


def cmd_reps(args) -> RunReport:
    ns = _int_list(args.n)
    limit = args.limit or max(ns)
    report = RunReport("reps", {"n": ns, "mod": args.mod, "classes": args.classes, "limit": limit})
    try:
        table = cached_sieve(limit)
    except SieveBudgetError as exc:
        raise UsageError(str(exc)) from exc
    S, label = _subset(args, table)
    for row in rep_count_profile([n for n in ns if n >= 4], S):
        report.add(f"two-reps:{row.n}", "pass", f"{row.t} unordered pairs from {label}",
                   {"t": row.t, "shape": row.shape, "ratio": row.ratio})
    if args.triple:
        for n in ns:
            if n >= 7:
                w = three_prime_witness(n, S)
                report.add(f"three-sum:{n}", "pass", "representable" if w else "not representable", w)
    return report


def cmd_construct_q(args) -> RunReport:
    seed = 0
    if args.config:
        try:
            sched, cfg = load_schedule_config(args.config)
        except (OSError, ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"bad config {args.config}: {exc}") from exc
        prune = bool(cfg.get("prune", True))
        seed = int(cfg.get("seed", 0))
    else:
        try:
            sched = make_schedule("geometric", {"x1": args.x1, "r": args.r}, args.K)
        except ScheduleError as exc:
            raise UsageError(str(exc)) from exc
        prune = True
    if args.skip_pruning:
        prune = False
    report = RunReport("construct-q", {"schedule": sched.to_dict(), "prune": prune, "seed": seed})
    report.notes.append(GROWTH_NOTE)
    try:
        table = cached_sieve(sched.at(sched.K))
    except SieveBudgetError as exc:
        raise UsageError(str(exc)) from exc
    layers = build_layers(sched, table, prune=prune)
    for t in layers.trims:
        if t.degenerate:
            report.notes.append(f"warning: degenerate trim at k={t.k}: the whole even interval was removed")
    report.check("schedule-congruence", sched.congruence_ok(), "every target is 29 mod 30")
    report.check("nesting", check_nesting(layers), "Q <= W <= H")
    report.check("odd-interval-identity", check_odd_identity(layers), "H, W, Q agree on odd intervals")
    if prune:
        for k, res in pruning_residuals(layers).items():
            report.check(f"pruning-complete:{k}", res == 0, f"residual representations at k={k}: {res}", {"residual": res})
        for k, (diff, union) in ledger_conservation(layers).items():
            report.check(f"ledger-conservation:{k}", diff == union, f"|W_2k|-|Q_2k| = {diff}, ledger union = {union}")
        for led in layers.ledgers:
            report.check(f"removals-bounded:{led.k}", led.removed <= led.sum_t_p,
                         f"removed {led.removed} <= sum of t_p = {led.sum_t_p}")
    fact2 = verify_fact2(layers)
    for e in fact2.entries:
        report.check(f"fact2:{e.k}", not e.representable, f"x_{2 * e.k + 1} = {e.target} not in Q+Q+Q",
                     {"triple": e.witness, "cases": e.cases})
    f1 = fact1_series(layers)
    for k, ok in f1.floor_respected.items():
        report.check(f"pruned-above-floor:{k}", ok, "every pruned element exceeds x/sqrt(log x)")
    report.notes.append(f"max |Q(x)-W(x)|/W(x) over checkpoints: {f1.max_rel_gap_QW:.6f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_checkpoint_csv(layers, out / "checkpoints.csv")
        write_ledger_csv(layers, out / "ledger.csv")
        (out / "fact2.json").write_text(json.dumps(jsonable(fact2.to_dict()), indent=2, sort_keys=True) + "\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="primesums", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"primesums {__version__}")
    ap.add_argument("--report", help="also write the JSON report to this path")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the claims attached to a named construction")
    p.add_argument("name", help=", ".join(REGISTRY))
    p.add_argument("--p", type=int)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="largest unit subset whose h-fold sumset misses the target")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--h", type=int, default=3, choices=(2, 3))
    p.add_argument("--target", default="full", choices=("full", "even", "odd"))
    p.add_argument("--universe", default="units", choices=("units", "all"))
    p.add_argument("--budget", default="default", help=f"node cap: integer or one of {sorted(BUDGETS)}")
    p.add_argument("--max-seconds", type=float, default=600.0)
    p.add_argument("--min-size", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--certificate", action="store_true", help="also certify the 5/8 threshold (odd square-free m)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("shen", help="exhaustive three-set covering check")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sizes", required=True, help="s1,s2,s3")
    p.add_argument("--max-m", type=int, default=15)
    p.add_argument("--budget", default="default")
    p.add_argument("--expect", choices=("pass", "fail"), help="expected outcome (default: pass iff sizes meet the hypothesis)")
    p.set_defaults(func=cmd_shen)

    p = sub.add_parser("density", help="relative density series of primes in residue classes")
    p.add_argument("--mod", type=int)
    p.add_argument("--classes", default="all", help="comma list, or 'all'; empty string for no classes")
    p.add_argument("--limit", type=int, required=True)
    p.add_argument("--checkpoints", help="comma list (default: the limit)")
    p.add_argument("--csv", help="write the series as CSV")
    p.add_argument("--expect-ratio", type=float)
    p.add_argument("--tolerance", type=float, default=0.0125)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("reps", help="two-prime representation counts against the sieve bound shape")
    p.add_argument("--n", required=True, help="comma list of targets")
    p.add_argument("--mod", type=int)
    p.add_argument("--classes", default="all")
    p.add_argument("--limit", type=int)
    p.add_argument("--triple", action="store_true", help="also search three-prime representations")
    p.set_defaults(func=cmd_reps)

    p = sub.add_parser("construct-q", help="build H, W, Q on a schedule and check them")
    p.add_argument("--config", help="JSON schedule config")
    p.add_argument("--x1", type=int, default=100)
    p.add_argument("--r", type=float, default=8)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--skip-pruning", action="store_true", help="negative control: Q = W")
    p.add_argument("--out", help="directory for checkpoints.csv, ledger.csv, fact2.json")
    p.set_defaults(func=cmd_construct_q)

    p = sub.add_parser("report-schema", help="print the JSON schema of run reports")
    p.set_defaults(func=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    if args.command == "report-schema":
        print(json.dumps(REPORT_SCHEMA, indent=2, sort_keys=True))
        return EXIT_PASS
    try:
        report = args.func(args)
    except UsageError as exc:
        print(f"primesums {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.dumps()
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
