"""Command line interface: ``conicdist check | distance | verify | export``.

Exit codes: 0 success, 1 input error, 2 nonsurjective (``check``),
3 failed equality suite (``verify``).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .distance.config import AUTO, EXACT, SAMPLED, ModeError, SolverConfig
from .distance.verify import verify_equalities
from .instance_io import (
    SchemaError,
    dumps,
    load_instance,
    load_report,
    report_to_dict,
    residual_mismatches,
    write_report,
)
from .process import DimensionError, is_surjective

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONSURJECTIVE = 2
EXIT_MISMATCH = 3
THREADS_ENV = "CONIC_DIST_THREADS"

INPUT_ERRORS = (SchemaError, ModeError, DimensionError, OSError, ValueError)


class InputError(Exception):
    pass


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}")
    return n


def _config(args) -> SolverConfig:
    if args.tol <= 0:
        raise InputError("--tol: expected a positive number")
    if args.budget < 1:
        raise InputError("--budget: expected a positive integer")
    return SolverConfig(mode=args.mode, tol=args.tol, budget=args.budget, seed=args.seed)


def _load(path):
    inst = load_instance(path)
    return inst, inst.process(), inst.structure()


def _need_blocks(blocks, path):
    if not blocks:
        raise SchemaError(f"blocks: {path} has no perturbation blocks")


def _emit(data: dict, out: Optional[str]):
    if out:
        write_report(data, out)
    else:
        print(dumps(data))


# commands -------------------------------------------------------------------


def cmd_check(args) -> int:
    _, F, _ = _load(args.instance)
    surj, y = is_surjective(F)
    out = {"surjective": surj}
    if not surj:
        out["witness"] = np.asarray(y).tolist()
    print(dumps(out))
    return EXIT_OK if surj else EXIT_NONSURJECTIVE


def _distance_data(path, cfg: SolverConfig) -> dict:
    inst, F, blocks = _load(path)
    _need_blocks(blocks, path)
    data = report_to_dict(verify_equalities(F, blocks, cfg), cfg)
    return dict({"instance": inst.name or os.path.basename(str(path))}, **data)


def cmd_distance(args) -> int:
    _emit(_distance_data(args.instance, _config(args)), args.out)
    return EXIT_OK


def _compare_report(stored: dict, fresh: dict, F, blocks, tol: float) -> list:
    """Differences between a stored report and a fresh computation."""
    bad = []
    for key, value in fresh["values"].items():
        s = stored.get("values", {}).get(key)
        if not isinstance(s, (int, float)):
            bad.append(f"values.{key}: stored {s!r} is not a number")
            continue
        same_inf = math.isinf(s) and math.isinf(value) and (s > 0) == (value > 0)
        if not same_inf and not abs(s - value) <= tol * max(1.0, abs(value)):
            bad.append(f"values.{key}: stored {s:.17g}, recomputed {value:.17g}")
    bad += residual_mismatches(stored, F, blocks)
    return bad


def _verify_one(path, cfg: SolverConfig, report_path: Optional[str]) -> tuple[int, str]:
    inst, F, blocks = _load(path)
    _need_blocks(blocks, path)
    report = verify_equalities(F, blocks, cfg)
    lines = [f"instance {inst.name or path} ({report.mode} mode)", report.gap_table()]
    for c in report.dichotomy:
        lines.append(f"alternative at rho={c.rho:g}: expected {c.expected}, found {c.found}, residual {c.residual:.3g}")
    failed = not report.ok
    if report_path is not None:
        fresh = report_to_dict(report, cfg)
        diffs = _compare_report(load_report(report_path), fresh, F, blocks, cfg.tol)
        lines += [f"MISMATCH {d}" for d in diffs]
        failed = failed or bool(diffs)
    lines.append("FAIL" if failed else "PASS")
    return (EXIT_MISMATCH if failed else EXIT_OK), "\n".join(lines)


def _verify_safe(job) -> tuple[int, str]:
    path, cfg, report_path = job
    try:
        return _verify_one(path, cfg, report_path)
    except INPUT_ERRORS as exc:
        return EXIT_INPUT, f"error: {path}: {exc}"


def cmd_verify(args) -> int:
    cfg = _config(args)
    if args.report is not None and len(args.instance) != 1:
        raise InputError("--report compares against exactly one instance")
    jobs = [(p, cfg, args.report) for p in args.instance]
    workers = min(thread_cap(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_verify_safe, jobs))
    else:
        results = [_verify_safe(j) for j in jobs]
    for code, text in results:
        print(text, file=sys.stderr if code == EXIT_INPUT else sys.stdout)
    codes = [c for c, _ in results]
    if EXIT_INPUT in codes:
        return EXIT_INPUT
    return max(codes)


def cmd_export(args) -> int:
    data = _distance_data(args.instance, _config(args))
    cert = data["certificates"]["rank_one"]
    out = {
        "instance": data["instance"],
        "distance": data["values"]["q3"],
        "perturbation": None if cert is None else {
            "T": cert["T"],
            "block_norms": cert["block_norms"],
            "size": cert["value"],
            "breaks_surjectivity": cert["verified"],
            "witness": cert["y_star"],
        },
        "scaled_back_surjective": data["checks"]["scaled_back_surjective"],
    }
    _emit(out, args.out)
    return EXIT_OK


# parser -----------------------------------------------------------------------


def _solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=(AUTO, EXACT, SAMPLED), default=AUTO,
                   help="exact needs polyhedral norms; auto picks exact when possible")
    p.add_argument("--tol", type=float, default=1e-6, help="gap tolerance between the quantities")
    p.add_argument("--budget", type=int, default=10_000, help="random directions in sampled mode")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conicdist", description="Structured distance to nonsurjectivity "
                                     "of conic linear systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide surjectivity; exit 0 surjective, 2 nonsurjective")
    p.add_argument("instance")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("distance", help="compute the four quantities and write a report")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("verify", help=f"run the equality suite; exit 3 on failure ({THREADS_ENV} sets workers)")
    p.add_argument("instance", nargs="+")
    _solver_flags(p)
    p.add_argument("--report", help="also compare against this stored report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write the rank-one perturbation certificate")
    p.add_argument("instance")
    _solver_flags(p)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, json.JSONDecodeError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
