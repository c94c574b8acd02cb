"""Command line front end.

Every subcommand reads one JSON config (``--config``) and writes its outputs
into ``--out``. The exit status is 0 exactly when every check it ran passed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import __version__
from .appearance import (
    Claim1Failure,
    appears_in,
    claim1_region,
    eligible_points,
    verify_claim1,
)
from .config import ConfigError, RunConfig
from .glue import BoundaryError, GlueError, GluedPoint, orbit
from .irs import (
    EmpiricalIRS,
    StageError,
    check_invariance,
    claim3_chain,
    invariance_sweep,
    theta,
)
from .report import canonical_json, csv_text, truncation_dot, write_atomic
from .schedule import (
    DENSITY_CSV_HEADER,
    ScheduleError,
    check_density,
    check_hitting,
    full_intervals,
    tail_cutoff,
)
from .words import make_s_sets, navigation_product

log = logging.getLogger("freeirs")


def _provenance(cfg: RunConfig) -> dict[str, Any]:
    return {"version": __version__, "config_sha256": cfg.digest()}


def _out(args: argparse.Namespace, name: str) -> str:
    return os.path.join(args.out, name)


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# -- schedule ----------------------------------------------------------------


def schedule_checks(cfg: RunConfig) -> tuple[list[dict[str, Any]], list[Any], bool]:
    s = cfg.schedule()
    hitting = []
    ok = True
    for n in sorted(s.K):
        intervals = full_intervals(s, n)
        if intervals:
            hit = check_hitting(s, n, intervals - 1)
            exact = n == 1 or all(
                s.values[i * s.K[n]:(i + 1) * s.K[n]].count(n) == 1 for i in range(intervals)
            )
            hitting.append({"n": n, "K": s.K[n], "intervals": intervals,
                            "hit": hit, "exactly_one": exact})
            ok &= hit and exact
    reports = [check_density(s, e, s.horizon) for e in cfg.epsilons]
    ok &= all(r.passed for r in reports)
    return hitting, reports, ok


def cmd_schedule(args: argparse.Namespace, cfg: RunConfig) -> int:
    s = cfg.schedule()
    hitting, reports, ok = schedule_checks(cfg)
    doc = dict(s.to_json(), hitting=hitting, **_provenance(cfg))
    write_atomic(_out(args, "schedule.json"), canonical_json(doc))
    write_atomic(_out(args, "density.csv"),
                 csv_text(DENSITY_CSV_HEADER, [r.csv_row() for r in reports]))
    log.info("schedule: K=%s, checks %s", dict(s.K), "passed" if ok else "FAILED")
    return 0 if ok else 1


# -- build -------------------------------------------------------------------


def cmd_build(args: argparse.Namespace, cfg: RunConfig) -> int:
    b = cfg.truncation()
    doc = dict(b.to_json(), **_provenance(cfg))
    write_atomic(_out(args, "truncation.json"), canonical_json(doc))
    write_atomic(_out(args, "truncation.dot"), truncation_dot(b, cfg.dot_blocks))
    log.info("built T_%d with %d points", b.M, b.size)
    return 0


# -- verify ------------------------------------------------------------------


def _claim1_task(payload: tuple) -> dict[str, Any]:
    cfg_raw, base, seed, stage, point, n, t = payload
    cfg = RunConfig(cfg_raw, base, seed, stage)
    b, s = cfg.truncation(), cfg.schedule()
    v = GluedPoint.parse(point)
    try:
        w = verify_claim1(b, s, v, n, t)
    except (Claim1Failure, GlueError, ValueError) as exc:
        return {"point": point, "passed": False, "error": str(exc)}
    block = {b.point(x) for x in b.block_points(w.l)}
    covered = block <= claim1_region(b, s, v, n, t)
    return {"point": point, "passed": covered, "l": w.l}


def verify_report(cfg: RunConfig, jobs: int = 1) -> dict[str, Any]:
    b, s = cfg.truncation(), cfg.schedule()
    m = cfg.stage
    e = EmpiricalIRS(b, m)
    sizes = {i: a.size for i, a in b.family.items()}

    invariance = []
    for cid, C in cfg.clopen_sets():
        for g in cfg.conjugators():
            try:
                r = check_invariance(e, C, g)
            except StageError as exc:
                invariance.append({"clopen": cid, "g": str(g), "error": str(exc),
                                   "equal": False})
                continue
            invariance.append({"clopen": cid, "g": str(g), "lhs": str(r.lhs),
                               "rhs": str(r.rhs), "equal": r.equal,
                               "contradictory": C.contradictory})
    grid = cfg.invariance_grid()
    sweep = invariance_sweep(e, *grid) if grid else None

    claim3 = []
    claim1 = []
    for n in cfg.claim_ns:
        for eps in cfg.epsilons:
            t = tail_cutoff(eps)
            if n > t or n not in s.K or n not in sizes:
                claim3.append({"n": n, "epsilon": str(eps), "t": t, "skipped": True,
                               "passed": True})
                continue
            Q = navigation_product(make_s_sets(t, n, s.K[n], sizes))
            for stage in range(1, m + 1):
                es = EmpiricalIRS(b, stage)
                row = {"n": n, "k_spec": Q.description, "stage": stage}
                try:
                    row.update(claim3_chain(es, n, t, Q).to_json(eps))
                except BoundaryError as exc:
                    row.update({"epsilon": str(eps), "passed": False, "error": str(exc)})
                claim3.append(row)
            points = [str(p) for p in eligible_points(b, t, math.factorial(m))]
            payloads = [(cfg.raw, cfg.base_dir, cfg.seed, cfg.stage_override, p, n, t)
                        for p in points]
            results = _pmap(_claim1_task, payloads, jobs)
            failures = [r for r in results if not r["passed"]]
            claim1.append({"n": n, "t": t, "epsilon": str(eps), "checked": len(results),
                           "failures": failures, "passed": not failures})

    hitting, density, sched_ok = schedule_checks(cfg)
    passed = (
        all(r["equal"] for r in invariance)
        and (sweep is None or sweep["passed"])
        and all(r["passed"] for r in claim3)
        and all(r["passed"] for r in claim1)
        and sched_ok
    )
    return {
        **_provenance(cfg),
        "stage": m,
        "M": b.M,
        "invariance": invariance,
        "invariance_sweep": sweep,
        "claim3": claim3,
        "claim1": claim1,
        "schedule": {"hitting": hitting, "density": [r.to_json() for r in density]},
        "passed": passed,
    }


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    report = verify_report(cfg, args.jobs)
    write_atomic(_out(args, "report.json"), canonical_json(report))
    log.info("verify: %s", "passed" if report["passed"] else "FAILED")
    return 0 if report["passed"] else 1


# -- theta -------------------------------------------------------------------


def cmd_theta(args: argparse.Namespace, cfg: RunConfig) -> int:
    b = cfg.truncation()
    rows = []
    summary: dict[str, Any] = {}
    sets = cfg.clopen_sets()
    for m in range(0, cfg.stage + 1):
        e = EmpiricalIRS(b, m)
        for cid, C in sets:
            if C.max_generator() > m:
                continue
            value = theta(e, C)
            rows.append([m, cid, value.numerator, value.denominator])
            summary.setdefault(cid, {"values": [], "contradictory": C.contradictory})
            summary[cid]["values"].append([m, str(value)])
    for entry in summary.values():
        vals = [Fraction(v) for _, v in entry["values"]]
        diffs = [y - x for x, y in zip(vals, vals[1:])]
        entry["oscillation"] = str(max(vals) - min(vals))
        entry["monotone"] = all(d >= 0 for d in diffs) or all(d <= 0 for d in diffs)
    write_atomic(_out(args, "theta.csv"),
                 csv_text(["stage", "clopen", "numerator", "denominator"], rows))
    write_atomic(_out(args, "theta_summary.json"),
                 canonical_json({**_provenance(cfg), "clopen": summary}))
    return 0


# -- appears -----------------------------------------------------------------


def cmd_appears(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = cfg.section("appears")
    if not spec:
        raise ConfigError("config has no 'appears' section")
    n = int(spec["n"])
    alpha = cfg.action(spec["alpha"]) if "alpha" in spec else cfg.alphas()[n]
    if "target" in spec:
        target = cfg.action(spec["target"])
        region = [int(p) for p in spec["region"]]
        where = {"region": region}
    else:
        target = cfg.truncation()
        point = GluedPoint.parse(spec["point"])
        if "region" in spec:
            region = [GluedPoint.parse(p) for p in spec["region"]]
        else:
            t = int(spec.get("t", tail_cutoff(cfg.epsilons[0])))
            sizes = {i: a.size for i, a in target.family.items()}
            Q = navigation_product(make_s_sets(t, n, cfg.schedule().K[n], sizes))
            region = sorted(orbit(target, point, Q))
        where = {"point": str(point), "region_size": len(region)}
    emb = appears_in(alpha, n, target, region)
    doc = {**_provenance(cfg), "n": n, **where, "present": emb is not None,
           "embedding": emb.to_json() if emb else None}
    write_atomic(_out(args, "appears.json"), canonical_json(doc))
    return 0


# -- navigate ----------------------------------------------------------------


def cmd_navigate(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = cfg.section("navigate")
    b, s = cfg.truncation(), cfg.schedule()
    n = int(spec.get("n", cfg.claim_ns[0]))
    t = int(spec.get("t", tail_cutoff(cfg.epsilons[0])))
    if "points" in spec:
        points = [GluedPoint.parse(p) for p in spec["points"]]
    else:
        points = eligible_points(b, t, math.factorial(cfg.stage))
    proofs = []
    ok = True
    for v in points:
        try:
            proofs.append(verify_claim1(b, s, v, n, t).to_json())
        except Claim1Failure as exc:
            ok = False
            proofs.append({"start": str(v), "failed_stage": exc.stage,
                           "error": str(exc), "frontier": exc.frontier})
    write_atomic(_out(args, "navigate.json"),
                 canonical_json({**_provenance(cfg), "n": n, "t": t, "proofs": proofs}))
    return 0 if ok else 1


COMMANDS = {
    "schedule": cmd_schedule,
    "build": cmd_build,
    "verify": cmd_verify,
    "theta": cmd_theta,
    "appears": cmd_appears,
    "navigate": cmd_navigate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freeirs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="seed for random alpha families")
        p.add_argument("--stage", type=int, help="override the stage m")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config, args.seed, args.stage)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ScheduleError, GlueError, StageError) as exc:
        print(f"freeirs {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
