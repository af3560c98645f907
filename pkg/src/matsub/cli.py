"""Command line front end: generate instances, run solvers, verify results.

Four subcommands:

- ``gen``     write a deterministic instance file for a (matroid, objective,
              n, seed) tuple, with optional shape knobs per matroid family
- ``run``     solve an instance with the two-phase pipeline or a baseline and
              write a result record with solution, value, and all counters
- ``verify``  recheck a result record against its instance: feasibility,
              value, and the instrumented query budgets
- ``bench``   time the batched evaluation kernels on both backends

All files are UTF-8 JSON with an explicit ``version`` field.  ``gen`` and
``run`` are byte-deterministic for a fixed seed, config, and backend, except
for the wall-time field of result records.  Exit codes: 0 success, 1
verification failure or corrupt data, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .core import greedy_basis_value
from .instances import (
    STREAM_GEN,
    STREAM_MULTILINEAR,
    STREAM_PHASE1,
    STREAM_ROUNDING,
    Instance,
    generate_instance,
)
from .objectives import set_eval_threads
from .optimizer import DEFAULT_CONFIG, OptimizerConfig, run_pipeline
from .oracles import brute_force_opt, feasibility_verify

RESULT_FORMAT_VERSION = 1

BRUTE_FORCE_LIMIT = 20


# ---------------------------------------------------------------------------
# helpers


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# gen


def _cmd_gen(args: argparse.Namespace) -> int:
    try:
        instance = generate_instance(
            args.matroid,
            args.function,
            args.n,
            args.seed,
            tree_depth=args.tree_depth,
            density=args.density,
            degree=args.degree,
        )
    except ValueError as exc:
        return _fail(str(exc))
    _write_text(args.output, instance.to_json())
    return 0


# ---------------------------------------------------------------------------
# run


def _run_full(instance: Instance, args: argparse.Namespace) -> dict:
    config = OptimizerConfig(
        threshold_factor=args.threshold_factor,
        stale_gate=args.stale_gate,
        verify_rounding=not args.no_verify_rounding,
    )
    result = run_pipeline(instance, args.epsilon, args.seed, config)
    return {
        "algorithm": "full",
        "epsilon": result.epsilon,
        "variant": result.variant,
        "solution": result.solution,
        "value": result.value,
        "frozen": result.frozen,
        "opt_estimate": result.opt_estimate,
        "counters": dict(result.counters),
        "config": asdict(config),
        "wall_time_s": result.wall_time,
    }


def _run_greedy(instance: Instance, args: argparse.Namespace) -> dict:
    f = instance.build_objective()
    start = time.perf_counter()
    value, chosen = greedy_basis_value(f, range(instance.n), instance.matroid.checker)
    return {
        "algorithm": "greedy",
        "solution": sorted(chosen),
        "value": value,
        "counters": {"total_f_queries": f.query_count},
        "wall_time_s": time.perf_counter() - start,
    }


def _run_brute(instance: Instance, args: argparse.Namespace) -> dict:
    f = instance.build_objective()
    start = time.perf_counter()
    value, chosen = brute_force_opt(f, instance.matroid)
    return {
        "algorithm": "brute",
        "solution": sorted(chosen),
        "value": value,
        "counters": {"total_f_queries": f.query_count},
        "wall_time_s": time.perf_counter() - start,
    }


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        instance = Instance.from_json(_read_text(args.instance))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        return _fail(f"corrupt instance file: {exc}")
    if args.algorithm == "brute" and instance.n > BRUTE_FORCE_LIMIT:
        print(
            f"error: brute force is capped at n <= {BRUTE_FORCE_LIMIT}",
            file=sys.stderr,
        )
        return 2
    if args.algorithm == "full" and not 0.0 < args.epsilon < 1.0 / 3.0:
        print("error: --epsilon must lie in (0, 1/3)", file=sys.stderr)
        return 2
    set_eval_threads(args.threads)
    try:
        if args.algorithm == "full":
            body = _run_full(instance, args)
        elif args.algorithm == "greedy":
            body = _run_greedy(instance, args)
        else:
            body = _run_brute(instance, args)
    finally:
        set_eval_threads(1)
    record = {
        "version": RESULT_FORMAT_VERSION,
        "seed": args.seed,
        "threads": args.threads,
        "streams": {
            "generation": [args.seed, STREAM_GEN],
            "phase1": [args.seed, STREAM_PHASE1],
            "multilinear": [args.seed, STREAM_MULTILINEAR],
            "rounding": [args.seed, STREAM_ROUNDING],
        },
        "backend": kernels.active_backend(),
        **body,
    }
    _write_text(args.output, _dump_record(record))
    return 0


# ---------------------------------------------------------------------------
# verify


def _check(report: list[str], label: str, ok: bool, detail: str = "") -> bool:
    status = "ok" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    report.append(f"{label}: {status}{suffix}")
    return ok


def _verify_budgets(
    report: list[str], instance: Instance, record: dict
) -> bool:
    counters = record.get("counters", {})
    eps = record.get("epsilon")
    if record.get("algorithm") != "full" or not counters or not eps:
        return True
    n = instance.n
    r = instance.matroid.rank()
    good = True
    if r > 0:
        cap1 = 8 * n / eps * math.log(max(r, 2) / eps)
        got1 = counters.get("phase1_f_queries", 0)
        good &= _check(
            report, "phase-1 query budget", got1 <= cap1, f"{got1} <= {cap1:.0f}"
        )
    cap2 = 8 * n * eps**-5 * math.log(n / eps) ** 2
    got2 = counters.get("phase2_f_queries", 0)
    good &= _check(
        report, "phase-2 query budget", got2 <= cap2, f"{got2} <= {cap2:.0f}"
    )
    cap_dt = 8 * n / eps
    got_dt = counters.get("dt_test_calls", 0) + counters.get("dt_insert_calls", 0)
    good &= _check(
        report, "incremental oracle budget", got_dt <= cap_dt, f"{got_dt} <= {cap_dt:.0f}"
    )
    cap_bi = 8 / eps * max(1.0, math.log(max(r, 1)))
    got_bi = counters.get("dt_batch_inserts", 0)
    good &= _check(
        report, "batch-insert budget", got_bi <= cap_bi, f"{got_bi} <= {cap_bi:.0f}"
    )
    return good


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        instance = Instance.from_json(_read_text(args.instance))
        record = json.loads(_read_text(args.result))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        return _fail(f"corrupt input: {exc}")
    report: list[str] = []
    good = _check(
        report,
        "format version",
        record.get("version") == RESULT_FORMAT_VERSION,
        str(record.get("version")),
    )
    solution = record.get("solution")
    value = record.get("value")
    if not isinstance(solution, list) or not isinstance(value, (int, float)):
        good = _check(report, "record fields", False, "solution/value missing")
    else:
        in_range = all(
            isinstance(e, int) and 0 <= e < instance.n for e in solution
        )
        good &= _check(report, "element range", in_range)
        feasible = in_range and feasibility_verify(instance.matroid, solution)
        good &= _check(report, "feasibility", feasible)
        if in_range:
            recomputed = instance.build_objective().value(solution)
            match = math.isclose(recomputed, value, rel_tol=1e-9, abs_tol=1e-9)
            good &= _check(
                report, "value", match, f"recomputed {recomputed!r} vs {value!r}"
            )
        good &= _verify_budgets(report, instance, record)
    verdict = "pass" if good else "fail"
    report.append(f"verify: {verdict}")
    print("\n".join(report))
    return 0 if good else 1


# ---------------------------------------------------------------------------
# bench


def _bench_callables(f, masks: np.ndarray, elems: np.ndarray):
    if f.kind == "coverage":
        return {
            "numpy": (
                lambda: kernels._coverage_values_np(
                    masks, f.indptr, f.indices, f.universe_weights
                ),
                lambda: kernels._coverage_marginal_means_np(
                    masks, elems, f.indptr, f.indices, f.universe_weights
                ),
            ),
            "numba": (
                lambda: kernels._coverage_values_nb(
                    masks, f.indptr, f.indices, f.universe_weights
                ),
                lambda: kernels._coverage_marginal_means_nb(
                    masks, elems, f.indptr, f.indices, f.universe_weights
                ),
            ),
        }
    return {
        "numpy": (
            lambda: kernels._facility_values_np(masks, f.similarity),
            lambda: kernels._facility_marginal_means_np(masks, elems, f.similarity),
        ),
        "numba": (
            lambda: kernels._facility_values_nb(masks, f.similarity),
            lambda: kernels._facility_marginal_means_nb(masks, elems, f.similarity),
        ),
    }


def _best_time(fn: Callable[[], np.ndarray], repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cmd_bench(args: argparse.Namespace) -> int:
    instance = generate_instance(args.matroid, args.function, args.n, args.seed)
    f = instance.build_objective()
    rng = np.random.default_rng(args.seed)
    masks = (rng.random((args.rows, instance.n)) < 0.5).astype(np.uint8)
    elems = np.arange(min(16, instance.n), dtype=np.int64)
    table = _bench_callables(f, masks, elems)
    backends = ["numpy"] + (["numba"] if kernels.NUMBA_AVAILABLE else [])
    timings: dict[str, tuple[float, float]] = {}
    outputs: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name in backends:
        values_fn, marginals_fn = table[name]
        outputs[name] = (values_fn(), marginals_fn())  # warm up / compile
        timings[name] = (
            _best_time(values_fn, args.repeats),
            _best_time(marginals_fn, args.repeats),
        )
    print(
        f"bench {args.function} n={args.n} rows={args.rows} "
        f"elems={elems.shape[0]} repeats={args.repeats}"
    )
    for name in backends:
        tv, tm = timings[name]
        print(f"{name:>6}: batch_values {tv * 1e3:8.3f} ms   "
              f"marginal_means {tm * 1e3:8.3f} ms")
    if len(backends) == 2:
        dv = float(np.abs(outputs["numpy"][0] - outputs["numba"][0]).max())
        dm = float(np.abs(outputs["numpy"][1] - outputs["numba"][1]).max())
        tvn, tmn = timings["numpy"]
        tvb, tmb = timings["numba"]
        print(f"speedup: batch_values {tvn / tvb:6.2f}x   "
              f"marginal_means {tmn / tmb:6.2f}x")
        print(f"max abs diff: batch_values {dv:.3e}   marginal_means {dm:.3e}")
        if dv > 1e-9 or dm > 1e-9:
            return _fail("backend outputs disagree")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matsub",
        description="Submodular maximization under matroid constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--matroid", required=True,
                     choices=["laminar", "graphic", "transversal"])
    gen.add_argument("--function", required=True,
                     choices=["coverage", "facility", "additive"])
    gen.add_argument("--n", type=int, required=True, help="ground set size")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--tree-depth", type=int, default=None,
                     help="laminar: maximum tree depth")
    gen.add_argument("--density", type=float, default=None,
                     help="graphic: target edges per vertex")
    gen.add_argument("--degree", type=int, default=None,
                     help="transversal: maximum left degree")
    gen.add_argument("-o", "--output", default="-", help="output path or -")
    gen.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="solve an instance")
    run.add_argument("instance", help="instance file")
    run.add_argument("--algorithm", default="full",
                     choices=["full", "greedy", "brute"])
    run.add_argument("--epsilon", type=float, default=0.2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--threads", type=int, default=1,
                     help="threads for multilinear sampling batches")
    run.add_argument("--threshold-factor", type=float,
                     default=DEFAULT_CONFIG.threshold_factor)
    run.add_argument("--stale-gate", default=DEFAULT_CONFIG.stale_gate,
                     choices=["count", "weight"])
    run.add_argument("--no-verify-rounding", action="store_true")
    run.add_argument("-o", "--output", default="-", help="output path or -")
    run.set_defaults(func=_cmd_run)

    verify = sub.add_parser("verify", help="recheck a result record")
    verify.add_argument("instance", help="instance file")
    verify.add_argument("result", help="result record file")
    verify.set_defaults(func=_cmd_verify)

    bench = sub.add_parser("bench", help="time the evaluation kernels")
    bench.add_argument("--matroid", default="laminar",
                       choices=["laminar", "graphic", "transversal"])
    bench.add_argument("--function", default="coverage",
                       choices=["coverage", "facility"])
    bench.add_argument("--n", type=int, default=64)
    bench.add_argument("--rows", type=int, default=512)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeats", type=int, default=5)
    bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
