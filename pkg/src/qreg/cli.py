"""Command-line harness: gen / solve / bench / grid-search / report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from .adaptive import AdaptiveConfig, adaptive_fit, initial_weights_from_fixed
from .bench import ExperimentPlan, grid_search, run_benchmark
from .dataset import SyntheticSpec, accumulate_gram, generate_rows, generate_to_file, load_dataset
from .encoding import build_qubo, decode_weights, uniform_precision
from .errors import QregError, ValidationError
from .regression import SgdConfig, r_squared, solve_closed_form, solve_sgd
from .reporting import report
from .rng import child_seed
from .samplers import SaConfig, external_sampler, sa_sampler
from .bench import KNOWN_SOLVERS


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rows", type=int, default=10_000, help="dataset rows N")
    p.add_argument("--features", type=int, default=10, help="feature count d (bias is added)")
    p.add_argument("--noise", type=float, default=0.1, help="label noise sigma")
    p.add_argument("--seed", type=int, default=0, help="generator seed")


def _add_sa_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--num-reads", type=int, default=1000, help="annealer restarts per solve")
    p.add_argument("--sweeps", type=int, default=1000, help="Metropolis sweeps per read")


def _add_precision_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=2, help="precision vector length")
    p.add_argument("--lo", type=float, default=0.0, help="fixed-baseline range start")
    p.add_argument("--hi", type=float, default=1.0, help="fixed-baseline range end")


def _add_adaptive_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", type=float, default=0.25, help="initial grid spacing")
    p.add_argument("--rate-desc", type=float, default=2.0, help="rate divisor on improvement")
    p.add_argument("--rate-asc", type=float, default=1.5, help="rate multiplier on regression")
    p.add_argument("--n-iter", type=int, default=30, help="adaptive iterations")
    p.add_argument("--plateau-tol", type=float, default=1e-5, help="early-stop tolerance (0 disables)")
    p.add_argument("--patience", type=int, default=5, help="flat iterations before early stop")
    p.add_argument("--from-zeros", action="store_true", help="start from zero weights instead of the fixed solve")


def _add_external_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--external-cmd", default=None, help="child-process command for ext solvers")
    p.add_argument("--external-timeout", type=float, default=120.0, help="child response timeout, seconds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qreg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a dataset file")
    _add_dataset_args(gen)
    gen.add_argument("--out", required=True, help="output dataset path")
    gen.add_argument("--chunk-rows", type=int, default=8192)

    solve = sub.add_parser("solve", help="run one solver on one dataset")
    solve.add_argument("--data", default=None, help="dataset file; omit to generate synthetically")
    _add_dataset_args(solve)
    solve.add_argument("--solver", required=True, choices=KNOWN_SOLVERS)
    _add_precision_args(solve)
    _add_sa_args(solve)
    _add_adaptive_args(solve)
    _add_external_args(solve)
    solve.add_argument("--learning-rate", type=float, default=0.01)
    solve.add_argument("--batch-size", type=int, default=32)
    solve.add_argument("--max-epochs", type=int, default=100)
    solve.add_argument("--weights", action="store_true", help="include weights in the output")

    bench = sub.add_parser("bench", help="run a full benchmark plan")
    bench.add_argument("--plan", default=None, help="TOML or JSON plan file")
    bench.add_argument("--feature-sizes", default=None, help="comma list, e.g. 5,10,20")
    _add_dataset_args(bench)
    bench.add_argument("--seeds", default=None, help="comma list of seeds (overrides --seed)")
    bench.add_argument("--solvers", default=None, help="comma list from " + ",".join(KNOWN_SOLVERS))
    _add_precision_args(bench)
    _add_sa_args(bench)
    _add_adaptive_args(bench)
    _add_external_args(bench)
    bench.add_argument("--out-dir", default=None, help="results directory (default qreg-results)")

    grid = sub.add_parser("grid-search", help="grid-search adaptive rate factors")
    grid.add_argument("--plan", default=None, help="TOML or JSON plan file")
    grid.add_argument("--feature-sizes", default=None)
    _add_dataset_args(grid)
    grid.add_argument("--seeds", default=None)
    _add_precision_args(grid)
    _add_sa_args(grid)
    _add_adaptive_args(grid)
    _add_external_args(grid)
    grid.add_argument("--rate-desc-grid", default="1.5,2,3", help="comma list of rate_desc values")
    grid.add_argument("--rate-asc-grid", default="1.25,1.5,2", help="comma list of rate_asc values")
    grid.add_argument("--out-dir", default=None, help="results directory (default qreg-results)")

    rep = sub.add_parser("report", help="print the R^2 matrix and write TTS plot data")
    rep.add_argument("results", help="results.json or results.csv from bench")
    rep.add_argument("--plot-out", default=None, help="tts_plot.csv destination")

    return ap


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _load_plan_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"plan file {p} does not exist")
    if p.suffix == ".json":
        return json.loads(p.read_text())
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(p, "rb") as f:
        return tomllib.load(f)


def _plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    data: dict = {}
    if args.plan:
        data = _load_plan_file(args.plan)
    adaptive = AdaptiveConfig(**data.pop("adaptive", {}))
    sa = SaConfig(**data.pop("sa", {}))
    sgd = SgdConfig(**data.pop("sgd", {}))
    plan = ExperimentPlan(adaptive=adaptive, sa=sa, sgd=sgd, **data)
    # Flags refine the plan-file values (or the defaults when no file given).
    if args.feature_sizes:
        plan.feature_sizes = _parse_int_list(args.feature_sizes)
    if args.seeds:
        plan.seeds = _parse_int_list(args.seeds)
    elif not args.plan:
        plan.seeds = [args.seed]
    if getattr(args, "solvers", None):
        plan.solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    if not args.plan:
        plan.n_rows = args.rows
        plan.noise_sigma = args.noise
        plan.k = args.k
        plan.precision_lo = args.lo
        plan.precision_hi = args.hi
        plan.adaptive = AdaptiveConfig(
            rate=args.rate,
            rate_desc=args.rate_desc,
            rate_asc=args.rate_asc,
            n_iter=args.n_iter,
            plateau_tol=args.plateau_tol,
            patience=args.patience,
            k=args.k,
        )
        plan.sa = SaConfig(num_reads=args.num_reads, sweeps=args.sweeps, seed=args.seed)
    if args.external_cmd:
        plan.external_cmd = args.external_cmd
        plan.external_timeout = args.external_timeout
    if getattr(args, "out_dir", None):
        plan.output_dir = Path(args.out_dir)
    return dataclasses.replace(plan)  # re-run validation after flag overrides


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_rows=args.rows, n_features=args.features, noise_sigma=args.noise, seed=args.seed
    )
    model = generate_to_file(args.out, spec, chunk_rows=args.chunk_rows)
    print(json.dumps({"path": args.out, "rows": spec.n_rows, "dim": spec.dim,
                      "true_weights": list(map(float, model.weights))}))
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    if args.data:
        stream = load_dataset(args.data)
        stats = accumulate_gram(stream)
        dim = stats.dim
    else:
        spec = SyntheticSpec(
            n_rows=args.rows, n_features=args.features, noise_sigma=args.noise, seed=args.seed
        )
        stream = list(generate_rows(spec))
        stats = accumulate_gram(stream)
        dim = spec.dim
    out: dict = {"solver": args.solver}
    sa_cfg = SaConfig(num_reads=args.num_reads, sweeps=args.sweeps, seed=args.seed)
    if args.solver.startswith("ext"):
        if not args.external_cmd:
            raise ValidationError("--external-cmd is required for external solvers")
        sampler = external_sampler(args.external_cmd, args.num_reads, args.external_timeout)
    else:
        sampler = sa_sampler(sa_cfg)
    t0 = time.perf_counter()
    if args.solver == "cf":
        w = solve_closed_form(stats)
    elif args.solver == "sgd":
        cfg = SgdConfig(
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            max_epochs=args.max_epochs,
            seed=args.seed,
        )
        w, epochs = solve_sgd(stream, cfg)
        out["epochs"] = epochs
    elif args.solver in ("sa", "ext"):
        spec_u = uniform_precision(dim, args.k, args.lo, args.hi)
        samples = sampler(build_qubo(stats, spec_u))
        w = decode_weights(samples.best.bits, spec_u)
        out["best_energy"] = samples.best.energy
    else:  # sa-ada / ext-ada
        if args.from_zeros:
            import numpy as np

            w_init = np.zeros(dim)
        else:
            w_init = initial_weights_from_fixed(stats, args.k, args.lo, args.hi, sampler)
        cfg = AdaptiveConfig(
            rate=args.rate,
            rate_desc=args.rate_desc,
            rate_asc=args.rate_asc,
            n_iter=args.n_iter,
            k=args.k,
            plateau_tol=args.plateau_tol,
            patience=args.patience,
        )
        state = adaptive_fit(stats, w_init, cfg, sampler)
        w = state.w_best
        out["iterations"] = state.iteration
        out["final_rate"] = state.rate
        out["trace"] = state.trace_json()
    out["tts_ms"] = (time.perf_counter() - t0) * 1e3
    out["r2"] = r_squared(w, stats)
    if args.weights:
        out["weights"] = list(map(float, w))
    print(json.dumps(out, indent=2))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    plan = _plan_from_args(args)
    rows = run_benchmark(plan)
    errors = [r for r in rows if r.errored]
    print(f"wrote {plan.output_dir / 'results.csv'} and results.json "
          f"({len(rows)} cells, {len(errors)} errored)")
    for r in errors:
        print(f"  error: features={r.features} solver={r.solver} seed={r.seed}: {r.extra['error']}",
              file=sys.stderr)
    return 1 if errors else 0


def _cmd_grid(args: argparse.Namespace) -> int:
    args.solvers = "sa-ada"
    plan = _plan_from_args(args)
    best, table = grid_search(plan, _parse_float_list(args.rate_desc_grid),
                              _parse_float_list(args.rate_asc_grid))
    failed = [t for t in table if t["failed"]]
    print(json.dumps({"best_rate_desc": best[0], "best_rate_asc": best[1],
                      "cells": len(table), "failed": len(failed),
                      "grid_csv": str(plan.output_dir / "grid.csv")}))
    return 1 if failed else 0


def _cmd_report(args: argparse.Namespace) -> int:
    print(report(args.results, args.plot_out))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "grid-search": _cmd_grid,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except QregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
