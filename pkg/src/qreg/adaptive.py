"""Iterative per-coefficient precision tuning.

Each iteration re-centers every coefficient's precision vector on the
current weights with grid spacing ``rate``, solves the resulting QUBO, and
scores the decoded weights with R^2.  Improvement moves the center to the
average of old and new weights and divides the rate by ``rate_desc``;
regression leaves the center alone and multiplies the rate by ``rate_asc``.
The best weights ever sampled are tracked separately and returned.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import GramSystem
from .encoding import PrecisionSpec, build_qubo, centered_precision, decode_weights, uniform_precision
from .errors import QregError, ValidationError
from .regression import r_squared
from .samplers import SamplerHandle, SampleSet


@dataclass(frozen=True)
class AdaptiveConfig:
    """Tuning-loop hyperparameters.

    ``rate_desc`` and ``rate_asc`` must both exceed 1 so the rate can shrink
    on improvement and grow on regression.  ``plateau_tol = 0`` disables the
    early stop; otherwise the loop ends after ``patience`` consecutive
    iterations with |R^2 change| below the tolerance.
    """

    rate: float = 0.25
    rate_desc: float = 2.0
    rate_asc: float = 1.5
    n_iter: int = 30
    k: int = 2
    plateau_tol: float = 1e-5
    patience: int = 5

    def __post_init__(self):
        if self.rate <= 0:
            raise ValidationError("rate must be > 0")
        if self.rate_desc <= 1:
            raise ValidationError("rate_desc must be > 1")
        if self.rate_asc <= 1:
            raise ValidationError("rate_asc must be > 1")
        if self.n_iter < 0:
            raise ValidationError("n_iter must be >= 0")
        if self.k < 2:
            raise ValidationError("k must be >= 2 for centered precision vectors")
        if self.plateau_tol < 0:
            raise ValidationError("plateau_tol must be >= 0")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    """One tuning iteration: R^2 of the sampled weights, the rate after the
    update, whether the iteration improved on the previous R^2, and the
    sampler wall time in seconds."""

    iteration: int
    r2_new: float
    rate: float
    improved: bool
    wall_time: float


@dataclass
class AdaptiveState:
    """Loop output: current and best weights, R^2 bookkeeping, full trace."""

    w: np.ndarray
    w_best: np.ndarray
    r2_old: float
    r2_best: float
    rate: float
    iteration: int
    trace: list[IterationRecord]

    def trace_json(self) -> list[dict]:
        """Trace as JSON-ready records, one per iteration."""
        return [asdict(rec) for rec in self.trace]


def adaptive_fit(
    stats: GramSystem,
    w_init: np.ndarray,
    cfg: AdaptiveConfig,
    sampler: SamplerHandle,
) -> AdaptiveState:
    """Run the precision-tuning loop from ``w_init``.

    The sampler handle is called once per iteration with the freshly built
    QUBO; its best read is decoded and scored.  Sampler failures propagate
    with the iteration index attached.  ``n_iter = 0`` returns the initial
    state untouched.
    """
    w_init = np.asarray(w_init, dtype=np.float64)
    if w_init.shape != (stats.dim,):
        raise ValidationError(f"w_init shape {w_init.shape} != ({stats.dim},)")
    w = w_init.copy()
    w_best = w_init.copy()
    r2_old = r2_best = r_squared(w_init, stats)
    rate = cfg.rate
    trace: list[IterationRecord] = []
    plateau_streak = 0
    iteration = 0
    for iteration in range(1, cfg.n_iter + 1):
        spec = centered_precision(w, rate, cfg.k)
        qubo = build_qubo(stats, spec)
        t0 = time.perf_counter()
        try:
            samples = sampler(qubo)
        except QregError as exc:
            exc.args = (f"sampler failed at iteration {iteration}: {exc}",)
            exc.iteration = iteration
            raise
        wall = time.perf_counter() - t0
        w_new = decode_weights(samples.best.bits, spec)
        r2_new = r_squared(w_new, stats)
        improved = r2_new > r2_old
        if improved:
            w = (w + w_new) / 2.0
            rate = rate / cfg.rate_desc
        else:
            rate = rate * cfg.rate_asc
        if r2_new > r2_best:
            r2_best = r2_new
            w_best = w_new.copy()
        delta = abs(r2_new - r2_old)
        r2_old = r2_new
        trace.append(
            IterationRecord(
                iteration=iteration, r2_new=r2_new, rate=rate, improved=improved, wall_time=wall
            )
        )
        if cfg.plateau_tol > 0:
            plateau_streak = plateau_streak + 1 if delta < cfg.plateau_tol else 0
            if plateau_streak >= cfg.patience:
                break
    return AdaptiveState(
        w=w,
        w_best=w_best,
        r2_old=r2_old,
        r2_best=r2_best,
        rate=rate,
        iteration=iteration,
        trace=trace,
    )


def initial_weights_from_fixed(
    stats: GramSystem,
    k: int,
    lo: float,
    hi: float,
    sampler: SamplerHandle,
) -> np.ndarray:
    """Starting point for the adaptive loop: decode one fixed-baseline solve.

    Builds the uniform precision QUBO over [lo, hi], samples it, and decodes
    the best read, reproducing the setup where adaptive runs start from the
    fixed method's output.
    """
    spec = uniform_precision(stats.dim, k, lo, hi)
    qubo = build_qubo(stats, spec)
    samples = sampler(qubo)
    return decode_weights(samples.best.bits, spec)


def solve_fixed(
    stats: GramSystem,
    k: int,
    lo: float,
    hi: float,
    sampler: SamplerHandle,
) -> tuple[np.ndarray, SampleSet, PrecisionSpec]:
    """Fixed-baseline solve returning (weights, sample set, spec) for reporting."""
    spec = uniform_precision(stats.dim, k, lo, hi)
    qubo = build_qubo(stats, spec)
    samples = sampler(qubo)
    return decode_weights(samples.best.bits, spec), samples, spec
