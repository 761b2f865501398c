"""Synthetic regression datasets and their sufficient statistics.

Datasets are N rows of D features (a bias column of ones at index 0, then d
i.i.d. standard-normal features) with labels ``y = w . x + eps``, where the
true weights are uniform on [0, 1] and ``eps`` is Gaussian noise.  Rows are
produced and consumed in chunks so that million-row datasets never have to
be materialized: every downstream solver works from the :class:`GramSystem`
sufficient statistics (X^T X, X^T Y, Y^T Y, sum of y, N) accumulated in a
single streaming pass.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import DatasetFormatError, DimensionMismatchError, ValidationError
from .rng import make_generator

DEFAULT_CHUNK_ROWS = 8192

# Little-endian header: magic, u32 version, u64 N, u32 D, u64 seed, f64 noise_sigma.
_MAGIC = b"QREGDAT1"
_VERSION = 1
_HEADER = struct.Struct("<8sIQIQd")

# A row stream is an iterable of (features, labels) chunks; ``features`` is
# (m, D) with the bias column included and ``labels`` is (m,).  A single row
# may be given as a 1-D feature vector with a scalar label.
RowChunk = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset; equal specs regenerate identical data."""

    n_rows: int
    n_features: int
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValidationError(f"n_rows must be >= 1, got {self.n_rows}")
        if self.n_features < 1:
            raise ValidationError(f"n_features must be >= 1, got {self.n_features}")
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def dim(self) -> int:
        """Coefficient count D = n_features + 1 (bias included)."""
        return self.n_features + 1


@dataclass(frozen=True)
class TrueModel:
    """Ground-truth regression coefficients, bias first, each in [0, 1]."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class GramSystem:
    """Sufficient statistics of a regression dataset.

    Holds ``gram = X^T X`` (D x D, symmetric PSD), ``moment = X^T Y``,
    ``y_sq = Y^T Y``, ``y_sum`` and the row count.  Everything a solver or
    the R^2 metric needs is a quadratic form in these, so raw rows are never
    required again once a GramSystem exists.  Instances are immutable and
    safe to share between threads.
    """

    dim: int
    gram: np.ndarray
    moment: np.ndarray
    y_sq: float
    y_sum: float
    n_rows: int

    def __post_init__(self):
        gram = np.array(self.gram, dtype=np.float64)
        moment = np.array(self.moment, dtype=np.float64)
        if gram.shape != (self.dim, self.dim):
            raise ValidationError(f"gram shape {gram.shape} != ({self.dim}, {self.dim})")
        if moment.shape != (self.dim,):
            raise ValidationError(f"moment shape {moment.shape} != ({self.dim},)")
        scale = np.abs(gram).max()
        if scale > 0 and np.abs(gram - gram.T).max() > 1e-9 * scale:
            raise ValidationError("gram matrix is not symmetric within 1e-9 relative")
        gram.setflags(write=False)
        moment.setflags(write=False)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "moment", moment)

    @property
    def tss(self) -> float:
        """Total sum of squares around the label mean, clamped at zero."""
        return max(self.y_sq - self.y_sum**2 / self.n_rows, 0.0)


def generate_rows(spec: SyntheticSpec, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> Iterator[RowChunk]:
    """Stream the dataset for ``spec`` as (features, labels) chunks.

    Three independent child streams (weights, features, noise) are derived
    from ``spec.seed``, so the emitted values do not depend on ``chunk_rows``.
    The true weights are exposed via :func:`generate_dataset`.
    """
    model = true_model_for(spec)
    yield from _row_chunks(spec, model, chunk_rows)


def true_model_for(spec: SyntheticSpec) -> TrueModel:
    """Ground-truth weights for ``spec``: D uniforms on [0, 1], bias first."""
    gen = make_generator(spec.seed, 0)
    return TrueModel(gen.random(spec.dim))


def _row_chunks(spec: SyntheticSpec, model: TrueModel, chunk_rows: int) -> Iterator[RowChunk]:
    if chunk_rows < 1:
        raise ValidationError("chunk_rows must be >= 1")
    gen_x = make_generator(spec.seed, 1)
    gen_eps = make_generator(spec.seed, 2)
    remaining = spec.n_rows
    while remaining > 0:
        m = min(remaining, chunk_rows)
        x = np.empty((m, spec.dim))
        x[:, 0] = 1.0
        x[:, 1:] = gen_x.standard_normal((m, spec.n_features))
        y = x @ model.weights + spec.noise_sigma * gen_eps.standard_normal(m)
        yield x, y
        remaining -= m


def generate_dataset(
    spec: SyntheticSpec,
    sink: Callable[[np.ndarray, np.ndarray], None],
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> TrueModel:
    """Generate the dataset for ``spec``, feeding each chunk to ``sink``.

    Returns the :class:`TrueModel` the labels were built from.
    """
    model = true_model_for(spec)
    for x, y in _row_chunks(spec, model, chunk_rows):
        sink(x, y)
    return model


def _as_chunk(features, labels, row_index: int) -> RowChunk:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    elif x.ndim != 2:
        raise DimensionMismatchError(f"row {row_index}: features must be 1-D or 2-D, got ndim={x.ndim}")
    y = np.atleast_1d(np.asarray(labels, dtype=np.float64))
    if y.shape != (x.shape[0],):
        raise DimensionMismatchError(
            f"row {row_index}: {x.shape[0]} feature rows but {y.shape[0]} labels"
        )
    return x, y


def accumulate_gram(rows: Iterable[RowChunk]) -> GramSystem:
    """Reduce a row stream to its :class:`GramSystem` in one pass.

    Chunked accumulation is associative, so any chunking of the same rows
    agrees to float round-off (~1e-10 relative).  Raises
    :class:`DimensionMismatchError` naming the first offending row when
    widths disagree, and :class:`ValidationError` on an empty stream.
    """
    gram = None
    moment = None
    y_sq = 0.0
    y_sum = 0.0
    n = 0
    for features, labels in rows:
        x, y = _as_chunk(features, labels, n)
        if gram is None:
            d = x.shape[1]
            gram = np.zeros((d, d))
            moment = np.zeros(d)
        elif x.shape[1] != gram.shape[0]:
            raise DimensionMismatchError(
                f"row {n}: width {x.shape[1]} != established width {gram.shape[0]}"
            )
        gram += x.T @ x
        moment += x.T @ y
        y_sq += float(y @ y)
        y_sum += float(y.sum())
        n += x.shape[0]
    if gram is None:
        raise ValidationError("cannot accumulate an empty row stream")
    gram = (gram + gram.T) / 2.0
    return GramSystem(dim=gram.shape[0], gram=gram, moment=moment, y_sq=y_sq, y_sum=y_sum, n_rows=n)


def merge_gram(a: GramSystem, b: GramSystem) -> GramSystem:
    """Combine GramSystems built from disjoint row chunks (sum of statistics)."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cannot merge dims {a.dim} and {b.dim}")
    return GramSystem(
        dim=a.dim,
        gram=a.gram + b.gram,
        moment=a.moment + b.moment,
        y_sq=a.y_sq + b.y_sq,
        y_sum=a.y_sum + b.y_sum,
        n_rows=a.n_rows + b.n_rows,
    )


def gram_from_arrays(x: np.ndarray, y: np.ndarray) -> GramSystem:
    """GramSystem of an in-memory (X, y) pair; convenience for small data."""
    return accumulate_gram([(x, y)])


def save_dataset(
    path: str | Path,
    spec: SyntheticSpec,
    rows: Iterable[RowChunk],
    true_model: TrueModel | None = None,
) -> None:
    """Write rows to ``path`` in the QREGDAT1 binary layout.

    Little-endian: the 40-byte header (magic, version, N, D, seed,
    noise_sigma) followed by N records of D f64 features and one f64 label.
    D is the full row width, bias column included.  When ``true_model`` is
    given, a ``<path>.meta.json`` sidecar records the spec and true weights.
    """
    path = Path(path)
    d = spec.dim
    written = 0
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_MAGIC, _VERSION, spec.n_rows, d, spec.seed, spec.noise_sigma))
        for features, labels in rows:
            x, y = _as_chunk(features, labels, written)
            if x.shape[1] != d:
                raise DimensionMismatchError(
                    f"row {written}: width {x.shape[1]} != header width {d}"
                )
            rec = np.empty((x.shape[0], d + 1), dtype="<f8")
            rec[:, :d] = x
            rec[:, d] = y
            f.write(rec.tobytes())
            written += x.shape[0]
    if written != spec.n_rows:
        raise DatasetFormatError(
            f"header says {spec.n_rows} rows but stream held {written}; file {path} is inconsistent"
        )
    if true_model is not None:
        meta = {
            "n_rows": spec.n_rows,
            "n_features": spec.n_features,
            "noise_sigma": spec.noise_sigma,
            "seed": spec.seed,
            "true_weights": [float(w) for w in true_model.weights],
        }
        Path(f"{path}.meta.json").write_text(json.dumps(meta, indent=2))


def generate_to_file(
    path: str | Path, spec: SyntheticSpec, chunk_rows: int = DEFAULT_CHUNK_ROWS
) -> TrueModel:
    """Generate the dataset for ``spec`` straight to disk; returns the TrueModel."""
    model = true_model_for(spec)
    save_dataset(path, spec, _row_chunks(spec, model, chunk_rows), true_model=model)
    return model


@dataclass
class DatasetFile:
    """A validated on-disk dataset; iterating yields (features, labels) chunks.

    Re-iterable: each ``iter()`` re-opens the file, so the same object can
    drive multi-epoch SGD without holding rows in memory.
    """

    path: Path
    n_rows: int
    dim: int
    seed: int
    noise_sigma: float
    chunk_rows: int = DEFAULT_CHUNK_ROWS
    _offset: int = field(default=_HEADER.size, repr=False)

    def __iter__(self) -> Iterator[RowChunk]:
        width = self.dim + 1
        with open(self.path, "rb") as f:
            f.seek(self._offset)
            remaining = self.n_rows
            while remaining > 0:
                m = min(remaining, self.chunk_rows)
                raw = np.fromfile(f, dtype="<f8", count=m * width)
                if raw.size != m * width:
                    raise DatasetFormatError(
                        f"{self.path}: truncated, expected {m * width} values, got {raw.size}"
                    )
                rec = raw.reshape(m, width)
                yield rec[:, : self.dim], rec[:, self.dim]
                remaining -= m

    def meta(self) -> dict | None:
        """Sidecar metadata (spec + true weights) when present."""
        sidecar = Path(f"{self.path}.meta.json")
        if not sidecar.exists():
            return None
        return json.loads(sidecar.read_text())


def load_dataset(path: str | Path, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> DatasetFile:
    """Open ``path``, validate header and size, and return a re-iterable stream."""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"{path}: no such dataset file")
    size = path.stat().st_size
    if size < _HEADER.size:
        raise DatasetFormatError(f"{path}: too small to hold a header ({size} bytes)")
    with open(path, "rb") as f:
        magic, version, n_rows, dim, seed, noise_sigma = _HEADER.unpack(f.read(_HEADER.size))
    if magic != _MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}, expected {_VERSION}")
    expected = _HEADER.size + n_rows * (dim + 1) * 8
    if size != expected:
        raise DatasetFormatError(
            f"{path}: header promises {n_rows} rows of width {dim}+1 "
            f"({expected} bytes) but file has {size} bytes"
        )
    return DatasetFile(
        path=path, n_rows=n_rows, dim=dim, seed=seed, noise_sigma=noise_sigma, chunk_rows=chunk_rows
    )
