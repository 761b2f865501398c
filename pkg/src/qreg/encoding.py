"""Binary encoding of regression weights and assembly of the regression QUBO.

Each real coefficient w_i is a subset sum of a length-K precision vector:
``w_i = sum_k pi_ik * z_ik`` with binary selectors z.  Stacking the D
precision vectors block-diagonally gives the precision matrix P (D x D*K)
with ``w = P z``, and substituting into the least-squares objective yields

    E(z) = z^T (P^T G P) z - 2 z^T (P^T m) ,    G = X^T X,  m = X^T Y,

so ``E(z) + Y^T Y`` equals the RSS of the decoded weights exactly.  The
discarded constant is kept on :class:`QuboProblem` as ``offset`` so sampler
energies convert straight back to RSS and R^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GramSystem
from .errors import DimensionMismatchError, SizeLimitError, ValidationError

GRID_ENUMERATION_LIMIT = 20


@dataclass(frozen=True)
class PrecisionSpec:
    """D precision vectors of common length K, one per coefficient.

    The uniform scheme stores the same vector D times; the adaptive scheme
    stores a tailored vector per coefficient.  ``vectors[i]`` are the values
    selectable for coefficient i.
    """

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError(f"precision vectors must form a (D, K) array, got ndim={v.ndim}")
        if v.shape[1] < 1:
            raise ValidationError("precision vectors need K >= 1 entries")
        if not np.all(np.isfinite(v)):
            raise ValidationError("precision vectors must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    @property
    def num_variables(self) -> int:
        """Binary variable count M = D * K."""
        return self.dim * self.k


def uniform_precision(dim: int, k: int, lo: float = 0.0, hi: float = 1.0) -> PrecisionSpec:
    """Fixed baseline: one shared vector dividing [lo, hi] into K equal parts.

    Every entry is (hi - lo)/K, with the base offset ``lo`` folded into the
    first entry, so for lo = 0 the subset sums are exactly the grid
    {j * (hi - lo)/K : j = 0..K}.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    if hi <= lo:
        raise ValidationError(f"need hi > lo, got [{lo}, {hi}]")
    step = (hi - lo) / k
    p = np.full(k, step)
    p[0] += lo
    return PrecisionSpec(np.tile(p, (dim, 1)))


def centered_precision(center: np.ndarray, rate: float, k: int) -> PrecisionSpec:
    """Per-coefficient vectors re-centered on ``center`` with grid spacing ``rate``.

    For coefficient i with center c:

        pi_i = (c - rate*(2^(K-1) - 1)/2,  rate*2^0,  ...,  rate*2^(K-2))

    i.e. a base entry plus a dyadic ladder.  Selecting the base plus any
    ladder subset walks a uniform grid of 2^(K-1) points with spacing
    ``rate``, centered on c; the empty selection keeps 0 representable.
    """
    if k < 2:
        raise ValidationError("centered precision needs k >= 2 (base entry plus at least one step)")
    if rate <= 0:
        raise ValidationError("rate must be > 0")
    center = np.asarray(center, dtype=np.float64)
    if center.ndim != 1:
        raise ValidationError("center must be a 1-D weight vector")
    d = center.shape[0]
    vectors = np.empty((d, k))
    vectors[:, 0] = center - rate * (2 ** (k - 1) - 1) / 2.0
    vectors[:, 1:] = rate * np.exp2(np.arange(k - 1))
    return PrecisionSpec(vectors)


def expand_precision_matrix(spec: PrecisionSpec) -> np.ndarray:
    """Dense D x (D*K) precision matrix P with pi_i in row i's block.

    Equals the sum of Kronecker products of the coordinate selector matrices
    with the per-coefficient vectors; for a uniform spec this reproduces
    ``kron(I_D, p^T)`` bit for bit.
    """
    d, k = spec.vectors.shape
    p = np.zeros((d, d * k))
    for i in range(d):
        p[i, i * k : (i + 1) * k] = spec.vectors[i]
    return p


@dataclass(frozen=True)
class QuboProblem:
    """min over binary z of ``z^T A z + b^T z``; offset restores the RSS scale.

    ``matrix`` is dense symmetric (M x M), ``linear`` the separate linear
    vector, and ``energy(z) + offset`` is the RSS of ``decode_weights(z)``.
    The generating :class:`PrecisionSpec` rides along for decoding.
    """

    dim: int
    matrix: np.ndarray
    linear: np.ndarray
    offset: float
    precision: PrecisionSpec

    def __post_init__(self):
        a = np.array(self.matrix, dtype=np.float64)
        b = np.array(self.linear, dtype=np.float64)
        if a.shape != (self.dim, self.dim):
            raise ValidationError(f"matrix shape {a.shape} != ({self.dim}, {self.dim})")
        if b.shape != (self.dim,):
            raise ValidationError(f"linear shape {b.shape} != ({self.dim},)")
        if self.dim != self.precision.num_variables:
            raise DimensionMismatchError(
                f"dim {self.dim} != D*K = {self.precision.num_variables} of the precision spec"
            )
        scale = np.abs(a).max()
        if scale > 0 and np.abs(a - a.T).max() > 1e-9 * scale:
            raise ValidationError("QUBO matrix is not symmetric within 1e-9 relative")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "linear", b)

    def energy(self, bits: np.ndarray) -> float:
        """z^T A z + b^T z for one assignment (offset excluded)."""
        z = np.asarray(bits, dtype=np.float64)
        return float(z @ self.matrix @ z + self.linear @ z)

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`energy` for an (n, M) batch of assignments."""
        z = np.asarray(bits, dtype=np.float64)
        return np.einsum("ij,jk,ik->i", z, self.matrix, z) + z @ self.linear


def build_qubo(stats: GramSystem, spec: PrecisionSpec) -> QuboProblem:
    """Assemble the regression QUBO ``A = P^T G P``, ``b = -2 P^T m``.

    Block (i, j) of A is ``G[i, j] * outer(pi_i, pi_j)``, built directly from
    that structure rather than through a dense P product.
    """
    if spec.dim != stats.dim:
        raise DimensionMismatchError(
            f"precision spec has {spec.dim} coefficients but stats have {stats.dim}"
        )
    v = spec.vectors
    d, k = v.shape
    m = d * k
    blocks = stats.gram[:, :, None, None] * v[:, None, :, None] * v[None, :, None, :]
    a = blocks.transpose(0, 2, 1, 3).reshape(m, m)
    b = -2.0 * (v * stats.moment[:, None]).reshape(m)
    return QuboProblem(dim=m, matrix=a, linear=b, offset=stats.y_sq, precision=spec)


def decode_weights(bits: np.ndarray, spec: PrecisionSpec) -> np.ndarray:
    """Map an assignment back to real weights: w_i = sum_k pi_ik * z_ik."""
    z = np.asarray(bits, dtype=np.float64)
    if z.shape != (spec.num_variables,):
        raise DimensionMismatchError(
            f"assignment length {z.shape} != D*K = {spec.num_variables}"
        )
    return (spec.vectors * z.reshape(spec.dim, spec.k)).sum(axis=1)


def representable_grid(spec: PrecisionSpec, coeff: int) -> np.ndarray:
    """Sorted, deduplicated subset sums of coefficient ``coeff``'s vector.

    This is every weight value the encoding can express for that
    coefficient.  Enumeration is 2^K, refused above K = 20.
    """
    if spec.k > GRID_ENUMERATION_LIMIT:
        raise SizeLimitError(f"representable_grid enumerates 2^K sums; K={spec.k} > {GRID_ENUMERATION_LIMIT}")
    sums = np.zeros(1)
    for entry in spec.vectors[coeff]:
        sums = np.concatenate([sums, sums + entry])
    sums.sort()
    keep = np.ones(sums.size, dtype=bool)
    keep[1:] = np.diff(sums) > 1e-12
    return sums[keep]


def qubo_to_dict(q: QuboProblem) -> dict:
    """Wire form of a QUBO for the external-sampler protocol.

    ``linear[i]`` carries ``b_i + A_ii`` (exact for binary variables since
    z_i^2 = z_i) and ``quadratic`` lists upper-triangular couplers
    ``[i, j, A_ij + A_ji]`` for i < j, omitting exact zeros, so a consumer
    reconstructs ``z^T A z + b^T z`` as
    ``sum_i linear[i] z_i + sum_(i<j) v_ij z_i z_j``.
    """
    a = q.matrix
    linear = q.linear + np.diag(a)
    iu, ju = np.triu_indices(q.dim, k=1)
    coupler = a[iu, ju] + a[ju, iu]
    nonzero = coupler != 0.0
    quadratic = [
        [int(i), int(j), float(v)]
        for i, j, v in zip(iu[nonzero], ju[nonzero], coupler[nonzero])
    ]
    return {
        "dim": q.dim,
        "linear": [float(x) for x in linear],
        "quadratic": quadratic,
        "offset": float(q.offset),
    }
