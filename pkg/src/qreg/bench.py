"""Benchmark harness: solver matrix over synthetic datasets, R^2/TTS reports.

TTS convention: the wall time of the solver call alone.  Dataset generation
and Gram accumulation happen once per (feature size, seed) and are excluded
from every solver's TTS; for adaptive solvers the clock covers the initial
fixed-baseline solve plus the whole tuning loop.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveConfig, adaptive_fit
from .dataset import SyntheticSpec, accumulate_gram, generate_rows
from .encoding import build_qubo, decode_weights, uniform_precision
from .errors import ResultsFormatError, ValidationError
from .regression import SgdConfig, r_squared, solve_closed_form, solve_sgd
from .rng import child_seed
from .samplers import SaConfig, external_sampler, sa_sampler

KNOWN_SOLVERS = ("cf", "sgd", "sa", "sa-ada", "ext", "ext-ada")
CSV_COLUMNS = ("features", "solver", "seed", "r2", "tts_ms", "extra_json")


@dataclass
class ExperimentPlan:
    """Full description of one benchmark run; every field has a CLI flag."""

    feature_sizes: list[int] = field(default_factory=lambda: list(range(5, 41, 5)))
    n_rows: int = 10_000
    noise_sigma: float = 0.1
    k: int = 2
    solvers: list[str] = field(default_factory=lambda: ["cf", "sgd", "sa", "sa-ada"])
    seeds: list[int] = field(default_factory=lambda: [0])
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    sa: SaConfig = field(default_factory=SaConfig)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    precision_lo: float = 0.0
    precision_hi: float = 1.0
    external_cmd: str | None = None
    external_timeout: float = 120.0
    output_dir: Path = Path("qreg-results")

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if not self.feature_sizes:
            raise ValidationError("feature_sizes must be non-empty")
        if any(b <= a for a, b in zip(self.feature_sizes, self.feature_sizes[1:])):
            raise ValidationError("feature_sizes must be strictly ascending")
        if not self.solvers:
            raise ValidationError("solver list must be non-empty")
        unknown = [s for s in self.solvers if s not in KNOWN_SOLVERS]
        if unknown:
            raise ValidationError(f"unknown solvers {unknown}; choose from {KNOWN_SOLVERS}")
        if not self.seeds:
            raise ValidationError("seeds must be non-empty")
        if self.external_cmd is None and any(s.startswith("ext") for s in self.solvers):
            raise ValidationError("external solvers requested but no external command configured")


@dataclass
class ResultRow:
    """One benchmark cell; ``r2``/``tts_ms`` are None when the cell errored."""

    features: int
    solver: str
    seed: int
    r2: float | None
    tts_ms: float | None
    extra: dict

    @property
    def errored(self) -> bool:
        return "error" in self.extra


def _sampler_for(plan: ExperimentPlan, solver: str, cell_seed: int):
    if solver.startswith("ext"):
        return external_sampler(plan.external_cmd, plan.sa.num_reads, plan.external_timeout)
    cfg = dataclasses.replace(plan.sa, seed=cell_seed)
    return sa_sampler(cfg)


def _run_cell(plan: ExperimentPlan, stats, data_stream, features: int, seed: int, solver: str) -> ResultRow:
    cell_seed = child_seed(seed, features, KNOWN_SOLVERS.index(solver))
    extra: dict = {}
    t0 = time.perf_counter()
    if solver == "cf":
        w = solve_closed_form(stats)
    elif solver == "sgd":
        cfg = dataclasses.replace(plan.sgd, seed=cell_seed)
        w, epochs = solve_sgd(data_stream, cfg)
        extra["epochs"] = epochs
    elif solver in ("sa", "ext"):
        sampler = _sampler_for(plan, solver, cell_seed)
        spec = uniform_precision(stats.dim, plan.k, plan.precision_lo, plan.precision_hi)
        samples = sampler(build_qubo(stats, spec))
        w = decode_weights(samples.best.bits, spec)
        extra["best_energy"] = samples.best.energy
    elif solver in ("sa-ada", "ext-ada"):
        sampler = _sampler_for(plan, solver, cell_seed)
        spec = uniform_precision(stats.dim, plan.k, plan.precision_lo, plan.precision_hi)
        samples = sampler(build_qubo(stats, spec))
        w_init = decode_weights(samples.best.bits, spec)
        state = adaptive_fit(stats, w_init, plan.adaptive, sampler)
        tts_ms = (time.perf_counter() - t0) * 1e3
        extra.update(
            iterations=state.iteration,
            final_rate=state.rate,
            r2_init=r_squared(w_init, stats),
            mean_iter_sample_ms=(
                1e3 * float(np.mean([rec.wall_time for rec in state.trace])) if state.trace else 0.0
            ),
        )
        return ResultRow(features, solver, seed, state.r2_best, tts_ms, extra)
    else:  # pragma: no cover - guarded by plan validation
        raise ValidationError(f"unknown solver {solver}")
    tts_ms = (time.perf_counter() - t0) * 1e3
    return ResultRow(features, solver, seed, r_squared(w, stats), tts_ms, extra)


def _materialized_or_stream(spec: SyntheticSpec):
    """Row source for SGD: in-memory when modest, seed-regenerated otherwise."""
    if spec.n_rows * (spec.dim + 1) <= 50_000_000:
        return list(generate_rows(spec))

    class _Regen:
        def __iter__(self):
            return generate_rows(spec)

    return _Regen()


def run_benchmark(plan: ExperimentPlan) -> list[ResultRow]:
    """Run every (feature size, seed, solver) cell and write results files.

    Solver errors never abort the run; the offending cell is recorded with an
    error marker.  Writes ``results.csv`` and ``results.json`` under
    ``plan.output_dir``.  Given the same plan the R^2 values of the internal
    solvers reproduce exactly.
    """
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    rows: list[ResultRow] = []
    for features in plan.feature_sizes:
        for seed in plan.seeds:
            spec = SyntheticSpec(
                n_rows=plan.n_rows,
                n_features=features,
                noise_sigma=plan.noise_sigma,
                seed=child_seed(seed, features),
            )
            stats = accumulate_gram(generate_rows(spec))
            data_stream = _materialized_or_stream(spec) if "sgd" in plan.solvers else None
            for solver in plan.solvers:
                try:
                    row = _run_cell(plan, stats, data_stream, features, seed, solver)
                except Exception as exc:
                    row = ResultRow(
                        features, solver, seed, None, None,
                        {"error": f"{type(exc).__name__}: {exc}"},
                    )
                rows.append(row)
    write_results(rows, plan.output_dir)
    return rows


def write_results(rows: list[ResultRow], output_dir: Path) -> None:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    with open(output_dir / "results.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.features,
                    row.solver,
                    row.seed,
                    "" if row.r2 is None else repr(row.r2),
                    "" if row.tts_ms is None else repr(row.tts_ms),
                    json.dumps(row.extra),
                ]
            )
    payload = [
        {
            "features": row.features,
            "solver": row.solver,
            "seed": row.seed,
            "r2": row.r2,
            "tts_ms": row.tts_ms,
            "extra": row.extra,
        }
        for row in rows
    ]
    (output_dir / "results.json").write_text(json.dumps(payload, indent=2))


def load_results(path: str | Path) -> list[ResultRow]:
    """Read rows back from a results.json or results.csv file."""
    path = Path(path)
    if not path.exists():
        raise ResultsFormatError(f"{path}: no such results file")
    try:
        if path.suffix == ".csv":
            with open(path, newline="") as f:
                reader = csv.DictReader(f)
                if reader.fieldnames != list(CSV_COLUMNS):
                    raise ResultsFormatError(
                        f"{path}: unexpected columns {reader.fieldnames}, expected {list(CSV_COLUMNS)}"
                    )
                return [
                    ResultRow(
                        features=int(rec["features"]),
                        solver=rec["solver"],
                        seed=int(rec["seed"]),
                        r2=float(rec["r2"]) if rec["r2"] else None,
                        tts_ms=float(rec["tts_ms"]) if rec["tts_ms"] else None,
                        extra=json.loads(rec["extra_json"]),
                    )
                    for rec in reader
                ]
        payload = json.loads(path.read_text())
        return [
            ResultRow(
                features=int(rec["features"]),
                solver=rec["solver"],
                seed=int(rec["seed"]),
                r2=rec["r2"],
                tts_ms=rec["tts_ms"],
                extra=rec.get("extra", {}),
            )
            for rec in payload
        ]
    except ResultsFormatError:
        raise
    except Exception as exc:
        raise ResultsFormatError(f"{path}: cannot parse results file: {exc}") from exc


def grid_search(
    plan: ExperimentPlan,
    rate_desc_grid: list[float],
    rate_asc_grid: list[float],
) -> tuple[tuple[float, float], list[dict]]:
    """Sweep adaptive (rate_desc, rate_asc) cells over the plan's instances.

    Returns the winning cell and the full table; the winner has the highest
    mean best-R^2, ties broken by lower mean TTS and then by cell order.
    Also writes ``grid.csv`` under the plan's output directory.
    """
    if not rate_desc_grid or not rate_asc_grid:
        raise ValidationError("grid axes must be non-empty")
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    instances = []
    for features in plan.feature_sizes:
        for seed in plan.seeds:
            spec = SyntheticSpec(
                n_rows=plan.n_rows,
                n_features=features,
                noise_sigma=plan.noise_sigma,
                seed=child_seed(seed, features),
            )
            instances.append((features, seed, accumulate_gram(generate_rows(spec))))
    table = []
    best_cell = None
    best_key = None
    for rate_desc in rate_desc_grid:
        for rate_asc in rate_asc_grid:
            cfg = dataclasses.replace(plan.adaptive, rate_desc=rate_desc, rate_asc=rate_asc)
            cell_plan = _with_adaptive(plan, cfg)
            r2s, times = [], []
            error = None
            for features, seed, stats in instances:
                try:
                    row = _run_cell(cell_plan, stats, None, features, seed, "sa-ada")
                except Exception as exc:
                    error = f"{type(exc).__name__}: {exc}"
                    break
                if row.errored:
                    error = row.extra["error"]
                    break
                r2s.append(row.r2)
                times.append(row.tts_ms)
            entry = {
                "rate_desc": rate_desc,
                "rate_asc": rate_asc,
                "mean_r2": float(np.mean(r2s)) if r2s and error is None else None,
                "mean_tts_ms": float(np.mean(times)) if times and error is None else None,
                "failed": error,
            }
            table.append(entry)
            if error is None:
                key = (-entry["mean_r2"], entry["mean_tts_ms"])
                if best_key is None or key < best_key:
                    best_key = key
                    best_cell = (rate_desc, rate_asc)
    with open(plan.output_dir / "grid.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["rate_desc", "rate_asc", "mean_r2", "mean_tts_ms", "failed"])
        writer.writeheader()
        writer.writerows(table)
    if best_cell is None:
        raise ValidationError("every grid cell failed; see grid.csv")
    return best_cell, table


def _with_adaptive(plan: ExperimentPlan, cfg: AdaptiveConfig) -> ExperimentPlan:
    return dataclasses.replace(plan, adaptive=cfg)
