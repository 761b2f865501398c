"""Classical regression baselines computed from sufficient statistics.

The closed-form solver and the R^2 metric consume only a
:class:`~qreg.dataset.GramSystem`; mini-batch SGD is the one solver that
re-touches raw rows and therefore takes a re-iterable row stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from .dataset import GramSystem, RowChunk, _as_chunk
from .errors import DegenerateTargetError, DivergenceError, SingularGramError, ValidationError
from .rng import make_generator

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SgdConfig:
    """Mini-batch SGD hyperparameters.

    ``tol`` stops the run once the epoch-over-epoch R^2 gain drops below it;
    ``seed`` fixes the shuffle order.
    """

    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 100
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")
        if self.tol <= 0:
            raise ValidationError("tol must be > 0")


def solve_closed_form(stats: GramSystem) -> np.ndarray:
    """Solve the normal equations (X^T X) w = X^T Y.

    Uses a Cholesky factorization (never the explicit inverse) plus one step
    of iterative refinement.  Raises :class:`SingularGramError` when the Gram
    matrix has condition estimate above 1e12, suggesting ridge jitter.
    """
    g = stats.gram
    m = stats.moment
    eigs = np.linalg.eigvalsh(g)
    cond = np.inf if eigs[0] <= 0 or eigs[-1] <= 0 else eigs[-1] / eigs[0]
    if cond > CONDITION_LIMIT:
        raise SingularGramError(
            f"gram matrix is singular or ill-conditioned (condition estimate {cond:.3e}); "
            "consider adding ridge jitter, e.g. gram + 1e-8 * trace/D * I"
        )
    cho = scipy.linalg.cho_factor(g, lower=True)
    w = scipy.linalg.cho_solve(cho, m)
    # One refinement pass keeps the residual well below the 1e-8 contract.
    residual = m - g @ w
    w = w + scipy.linalg.cho_solve(cho, residual)
    norm_m = np.linalg.norm(m)
    if not np.all(np.isfinite(w)):
        raise SingularGramError("closed-form solve produced non-finite weights")
    if np.linalg.norm(g @ w - m) > 1e-8 * max(norm_m, np.finfo(float).tiny):
        raise SingularGramError("normal-equation residual exceeds 1e-8 relative after refinement")
    return w


def rss(w: np.ndarray, stats: GramSystem) -> float:
    """Residual sum of squares as a quadratic form, clamped at zero.

    Identity: sum_n (y_n - w.x_n)^2 = w^T G w - 2 w^T m + Y^T Y.
    """
    w = np.asarray(w, dtype=np.float64)
    return max(float(w @ stats.gram @ w - 2.0 * w @ stats.moment + stats.y_sq), 0.0)


def r_squared(w: np.ndarray, stats: GramSystem) -> float:
    """Coefficient of determination R^2 = 1 - RSS/TSS (negative for bad fits)."""
    tss = stats.tss
    if tss <= 0:
        raise DegenerateTargetError("degenerate target variance: labels are all equal")
    return 1.0 - rss(w, stats) / tss


def solve_sgd(data: Iterable[RowChunk], config: SgdConfig = SgdConfig()) -> tuple[np.ndarray, int]:
    """Mini-batch SGD on a re-iterable row stream; returns (weights, epochs used).

    Per batch of size B: ``w <- w - lr * (2/B) * Xb^T (Xb w - yb)`` (the
    factor 2 is the OLS gradient's, not folded into the learning rate).
    Weights start at zero.  Rows are shuffled within each streamed chunk, so
    batches never straddle chunk boundaries.  The Gram statistics picked up
    during the first epoch provide the cheap per-epoch R^2 used by the
    stopping rule; when the labels carry no variance the rule is skipped and
    the loop runs to ``max_epochs``.
    """
    if isinstance(data, tuple) and len(data) == 2:
        data = [data]
    lr = config.learning_rate
    w = None
    stats: GramSystem | None = None
    gram = moment = None
    y_sq = y_sum = 0.0
    r2_prev = None
    epochs = 0
    for epoch in range(1, config.max_epochs + 1):
        epochs = epoch
        gen = make_generator(config.seed, epoch)
        count = 0
        for features, labels in data:
            x, y = _as_chunk(features, labels, count)
            count += x.shape[0]
            if w is None:
                w = np.zeros(x.shape[1])
                gram = np.zeros((x.shape[1], x.shape[1]))
                moment = np.zeros(x.shape[1])
            if stats is None:
                gram += x.T @ x
                moment += x.T @ y
                y_sq += float(y @ y)
                y_sum += float(y.sum())
            order = gen.permutation(x.shape[0])
            for start in range(0, x.shape[0], config.batch_size):
                idx = order[start : start + config.batch_size]
                xb = x[idx]
                grad = 2.0 / len(idx) * (xb.T @ (xb @ w - y[idx]))
                w -= lr * grad
                if not np.all(np.isfinite(w)):
                    raise DivergenceError(
                        f"SGD diverged at epoch {epoch}: weights became non-finite; "
                        f"try a smaller learning rate than {lr}",
                        epoch=epoch,
                    )
        if count == 0:
            raise ValidationError("cannot run SGD on an empty row stream")
        if stats is None:
            stats = GramSystem(
                dim=w.shape[0],
                gram=(gram + gram.T) / 2.0,
                moment=moment,
                y_sq=y_sq,
                y_sum=y_sum,
                n_rows=count,
            )
        if stats.tss > 0:
            r2 = r_squared(w, stats)
            # A fit this far below the mean predictor only happens when the
            # step size is blowing the iteration up; fail before overflow.
            if not np.isfinite(r2) or r2 < -1e12:
                raise DivergenceError(
                    f"SGD diverged at epoch {epoch}: R^2 fell to {r2:.3e}; "
                    f"try a smaller learning rate than {lr}",
                    epoch=epoch,
                )
            if r2_prev is not None and r2 - r2_prev < config.tol:
                break
            r2_prev = r2
    return w, epochs
