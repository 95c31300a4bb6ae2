"""Command line interface.

Subcommands: ``gen`` (write instance documents), ``solve`` (run one
algorithm on one instance), ``bench`` (ratio table over a generated
corpus), ``exact`` (canonical brute-force optimum), and ``verify``
(randomized structural checks: rota, laminar, trace, badprob, k4).

Exit codes: 0 on success, 1 on usage or input errors, 2 when a checked
invariant is violated (approximation floor, exchange existence, trace
soundness, probability bound, witness verification).
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import campaigns, generators
from .exact import (
    BRANCH_AND_BOUND,
    SUBSET_ENUM,
    SizeLimitExceeded,
    brute_force_optimum,
)
from .instance import InstanceError, ParityInstance
from .serialization import (
    FormatError,
    ResultRecord,
    dumps_canonical,
    format_fraction,
    load_instance_doc,
)
from .solver import (
    FIRST_LEX,
    SWAP_RULES,
    best_of_runs,
    greedy,
    scale_weights,
    sliding_local_search,
    trace_to_json_obj,
)

USAGE_EXIT = 1
VIOLATION_EXIT = 2

DEFAULT_EPSILON = Fraction("0.3873")
DEFAULT_DELTA = Fraction("0.0001")
DEFAULT_GAMMA = Fraction("0.2253")
DEFAULT_SCALE_EPSILON = Fraction(1, 10)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; reserve 2 for violations."""

    def error(self, message: str) -> Any:
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_family_args(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument(
        "--gen",
        required=required,
        choices=sorted(generators.FAMILIES),
        help="instance generator family",
    )
    p.add_argument("--k", type=int, help="generator arity")
    p.add_argument("--rho", type=_fraction, help="greedy-trap light-edge discount")
    p.add_argument("--n", type=int, help="generator size (vertices / elements)")
    p.add_argument("--m", type=int, help="generator edge count")


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", nargs="?", help="instance JSON file")
    _add_family_args(p, required=False)


def _family_seeded(family: str) -> bool:
    return "seed" in inspect.signature(generators.FAMILIES[family]).parameters


def _gen_kwargs(args: argparse.Namespace, seed: int | None = None) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for key in ("k", "rho", "n", "m"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    accepted = set(inspect.signature(generators.FAMILIES[args.gen]).parameters)
    unknown = sorted(set(params) - accepted)
    if unknown:
        raise generators.GeneratorError(
            f"family {args.gen!r} does not take: {', '.join(unknown)}"
        )
    if "seed" in accepted:
        params["seed"] = args.seed if seed is None else seed
    return params


def _load_source(args: argparse.Namespace) -> tuple[str, ParityInstance]:
    if args.instance and args.gen:
        raise FormatError("give an instance file or --gen, not both")
    if args.gen:
        doc = generators.build_doc(args.gen, **_gen_kwargs(args))
        return doc.name, doc.normalize()
    if args.instance:
        doc = load_instance_doc(args.instance)
        try:
            return doc.name, doc.normalize()
        except InstanceError as exc:
            raise FormatError(f"invalid instance in {args.instance}: {exc}") from exc
    raise FormatError("an instance file or --gen is required")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=_fraction, default=DEFAULT_EPSILON)
    p.add_argument("--delta", type=_fraction, default=DEFAULT_DELTA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1, help="independent shift draws")
    p.add_argument("--swap-rule", choices=sorted(SWAP_RULES), default=FIRST_LEX)
    scale = p.add_mutually_exclusive_group()
    scale.add_argument(
        "--scale",
        dest="scale",
        action="store_true",
        default=True,
        help="round weights onto an integer grid before solving (default)",
    )
    scale.add_argument("--no-scale", dest="scale", action="store_false")
    p.add_argument("--scale-epsilon", type=_fraction, default=DEFAULT_SCALE_EPSILON)


def _ratio_floor(arity: int, scaled: bool, scale_epsilon: Fraction) -> Fraction:
    floor = Fraction(1, arity)
    if scaled:
        floor *= 1 - scale_epsilon
    return floor


def cmd_gen(args: argparse.Namespace) -> int:
    if args.count < 1:
        raise FormatError("--count must be positive")
    texts: list[str] = []
    for i in range(args.count):
        doc = generators.build_doc(args.gen, **_gen_kwargs(args, seed=args.seed + i))
        texts.append(dumps_canonical(doc.to_json_obj()))
        if not _family_seeded(args.gen):
            break  # deterministic family: every copy would be identical
    _emit("".join(texts), args.out)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    name, inst = _load_source(args)
    work = scale_weights(inst, args.scale_epsilon) if args.scale else inst
    algo = args.algo
    if algo == "sliding" and args.runs > 1:
        algo = "best-of-runs"

    start = time.perf_counter()
    trace = None
    tau = None
    swaps = None
    if algo == "greedy":
        before = work.matroid.calls
        chosen = greedy(work)
        calls = work.matroid.calls - before
        seed_used = None
    elif algo == "best-of-runs":
        before = work.matroid.calls
        chosen = best_of_runs(
            work, args.epsilon, args.delta, args.runs, args.seed, args.swap_rule
        )
        calls = work.matroid.calls - before
        seed_used = args.seed
    else:
        chosen, trace = sliding_local_search(
            work, args.epsilon, args.delta, args.seed, args.swap_rule
        )
        calls = trace.oracle_calls
        tau = trace.tau
        swaps = sum(len(r.swaps) for r in trace.records)
        seed_used = args.seed
    wall = time.perf_counter() - start

    achieved = sum((inst.weights[j] for j in chosen.edges), Fraction(0))
    optimum = None
    ratio = None
    status = "ok"
    violation = False
    if args.exact:
        try:
            result = brute_force_optimum(inst, limit=args.exact_limit)
            optimum = result.optimum.weight
            ratio = campaigns.approx_ratio(achieved, optimum)
            floor = _ratio_floor(inst.arity, args.scale, args.scale_epsilon)
            if ratio < floor:
                status = "ratio-violation"
                violation = True
        except SizeLimitExceeded:
            status = "skipped"

    record = ResultRecord(
        instance=name,
        algo=algo,
        seed=seed_used,
        tau=tau,
        weight=achieved,
        optimum=optimum,
        ratio=ratio,
        oracle_calls=calls,
        swaps=swaps,
        status=status,
        wall_time_s=wall,
    )
    _emit(dumps_canonical(record.to_json_obj(with_timing=args.timings)), args.out)
    if args.trace_out and trace is not None:
        _emit(dumps_canonical(trace_to_json_obj(trace)), args.trace_out)
    return VIOLATION_EXIT if violation else 0


def cmd_exact(args: argparse.Namespace) -> int:
    name, inst = _load_source(args)
    try:
        result = brute_force_optimum(inst, limit=args.exact_limit, method=args.method)
    except SizeLimitExceeded as exc:
        obj: dict[str, Any] = {"instance": name, "status": "skipped", "reason": str(exc)}
        _emit(dumps_canonical(obj), args.out)
        return 0
    obj = {
        "instance": name,
        "status": "ok",
        "weight": format_fraction(result.optimum.weight),
        "edges": sorted(result.optimum.edges),
        "explored": result.explored,
        "method": result.method,
    }
    _emit(dumps_canonical(obj), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.count < 1 or args.runs < 1:
        raise FormatError("--count and --runs must be positive")
    rows: list[dict[str, str]] = []
    any_violation = False
    for i in range(args.count):
        doc = generators.build_doc(args.gen, **_gen_kwargs(args, seed=args.seed + i))
        inst = doc.normalize()
        work = scale_weights(inst, args.scale_epsilon) if args.scale else inst
        try:
            optimum = brute_force_optimum(inst, limit=args.exact_limit).optimum.weight
            status = "ok"
        except SizeLimitExceeded:
            optimum = None
            status = "skipped"

        runs = 1 if args.algo == "greedy" else args.runs
        rng = random.Random(f"bench:{args.seed}:{i}")
        ratios: list[Fraction] = []
        floor = _ratio_floor(inst.arity, args.scale, args.scale_epsilon)
        for _ in range(runs):
            run_seed = rng.getrandbits(63)
            if args.algo == "greedy":
                chosen = greedy(work)
            else:
                chosen, _ = sliding_local_search(
                    work, args.epsilon, args.delta, run_seed, args.swap_rule
                )
            achieved = sum((inst.weights[j] for j in chosen.edges), Fraction(0))
            if optimum is not None:
                ratio = campaigns.approx_ratio(achieved, optimum)
                ratios.append(ratio)
                if ratio < floor:
                    status = "ratio-violation"
                    any_violation = True

        k = inst.arity
        row = {
            "instance": doc.name,
            "algo": args.algo,
            "runs": str(runs),
            "status": status,
            "mean_ratio": "",
            "min_ratio": "",
            "max_ratio": "",
            "floor_k": f"{1 / k:.6f}",
            "floor_910": f"{10 / (9 * (k + 1)):.6f}",
            "floor_2ln2": f"{2 * math.log(2) / (k + 1):.6f}",
        }
        if ratios:
            mean = sum(ratios, Fraction(0)) / len(ratios)
            row["mean_ratio"] = f"{float(mean):.6f}"
            row["min_ratio"] = f"{float(min(ratios)):.6f}"
            row["max_ratio"] = f"{float(max(ratios)):.6f}"
        rows.append(row)
        if not _family_seeded(args.gen):
            break

    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=[
            "instance",
            "algo",
            "runs",
            "status",
            "mean_ratio",
            "min_ratio",
            "max_ratio",
            "floor_k",
            "floor_910",
            "floor_2ln2",
        ],
        lineterminator="\n",
    )
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return VIOLATION_EXIT if any_violation else 0


def cmd_verify(args: argparse.Namespace) -> int:
    what = args.what
    if what == "rota":
        report = campaigns.rota_campaign(args.count, args.seed, args.max_elements)
        bad = bool(report["failures"])
    elif what == "laminar":
        report = campaigns.laminar_campaign(args.count, args.seed, args.max_elements)
        bad = bool(report["failures"])
    elif what == "trace":
        report = campaigns.trace_campaign(
            args.count, args.seed, args.epsilon, args.delta, args.gamma
        )
        bad = bool(report["failures"]) or report["successes"] < args.count
    elif what == "badprob":
        _, inst = _load_source(args)
        report = campaigns.near_marker_report(
            inst, args.epsilon, args.gamma, args.tau_samples, args.seed
        )
        bad = not report["all_within_tolerance"]
    else:
        report = campaigns.k4_report()
        bad = not report["verified"]
    _emit(dumps_canonical(report), args.out)
    return VIOLATION_EXIT if bad else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="mpls", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write instance documents")
    _add_family_args(p_gen, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument(
        "--count", type=int, default=1, help="instances (seeds seed..seed+count-1)"
    )
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="run one algorithm on one instance")
    _add_source_args(p_solve)
    _add_solver_args(p_solve)
    p_solve.add_argument(
        "--algo", choices=("sliding", "best-of-runs", "greedy"), default="sliding"
    )
    p_solve.add_argument(
        "--exact", action="store_true", help="also compute the optimum and ratio"
    )
    p_solve.add_argument("--exact-limit", type=int, default=None)
    p_solve.add_argument("--timings", action="store_true", help="include wall time in output")
    p_solve.add_argument("--trace-out", default=None, help="write the solver trace as JSON")
    p_solve.add_argument("--out", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_exact = sub.add_parser("exact", help="canonical brute-force optimum")
    _add_source_args(p_exact)
    p_exact.add_argument("--seed", type=int, default=0)
    p_exact.add_argument(
        "--method", choices=(SUBSET_ENUM, BRANCH_AND_BOUND), default=BRANCH_AND_BOUND
    )
    p_exact.add_argument("--exact-limit", type=int, default=None)
    p_exact.add_argument("--out", default=None)
    p_exact.set_defaults(func=cmd_exact)

    p_bench = sub.add_parser("bench", help="ratio table over a generated corpus")
    _add_family_args(p_bench, required=True)
    _add_solver_args(p_bench)
    p_bench.add_argument("--algo", choices=("sliding", "greedy"), default="sliding")
    p_bench.add_argument("--count", type=int, default=5)
    p_bench.add_argument("--exact-limit", type=int, default=None)
    p_bench.add_argument("--out", default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="randomized structural checks")
    vsub = p_verify.add_subparsers(dest="what", required=True)
    for name in ("rota", "laminar"):
        p = vsub.add_parser(name)
        p.add_argument("--count", type=int, default=200)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-elements", type=int, default=7)
        p.add_argument("--out", default=None)
        p.set_defaults(func=cmd_verify)
    p_trace = vsub.add_parser("trace")
    p_trace.add_argument("--count", type=int, default=25)
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--epsilon", type=_fraction, default=DEFAULT_EPSILON)
    p_trace.add_argument("--delta", type=_fraction, default=DEFAULT_DELTA)
    p_trace.add_argument("--gamma", type=_fraction, default=DEFAULT_GAMMA)
    p_trace.add_argument("--out", default=None)
    p_trace.set_defaults(func=cmd_verify)
    p_bad = vsub.add_parser("badprob")
    _add_source_args(p_bad)
    p_bad.add_argument("--seed", type=int, default=0)
    p_bad.add_argument("--epsilon", type=_fraction, default=DEFAULT_EPSILON)
    p_bad.add_argument("--gamma", type=_fraction, default=DEFAULT_GAMMA)
    p_bad.add_argument("--tau-samples", type=int, default=2000)
    p_bad.add_argument("--out", default=None)
    p_bad.set_defaults(func=cmd_verify)
    p_k4 = vsub.add_parser("k4")
    p_k4.add_argument("--out", default=None)
    p_k4.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InstanceError, generators.GeneratorError, OSError) as exc:
        print(f"mpls: error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
