"""QUBO samplers: exhaustive oracle, simulated annealing, external process.

All samplers return a :class:`SampleSet` whose energies are recomputed from
the :class:`~qreg.encoding.QuboProblem` itself, never trusted from the
search, so stored energies are reproducible from the assignments.  The
external-process adapter is the seam where a hardware annealer plugs in.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .encoding import QuboProblem, qubo_to_dict
from .errors import (
    DegenerateQuboError,
    EnergyMismatchError,
    SamplerProcessError,
    SamplerProtocolError,
    SamplerTimeoutError,
    SizeLimitError,
    ValidationError,
)
from .rng import child_seed

BRUTE_FORCE_LIMIT = 24
ENERGY_CHECK_TOL = 1e-6

SamplerHandle = Callable[[QuboProblem], "SampleSet"]


@dataclass(frozen=True)
class SampleRecord:
    bits: np.ndarray
    energy: float
    occurrences: int


@dataclass(frozen=True)
class SampleSet:
    """Decoded sampler output: records sorted best-first, with timing."""

    records: list[SampleRecord]
    sampler_name: str
    wall_time: float
    num_reads: int

    def __post_init__(self):
        if not self.records:
            raise ValidationError("a SampleSet needs at least one record")
        energies = [r.energy for r in self.records]
        if any(b < a for a, b in zip(energies, energies[1:])):
            raise ValidationError("SampleSet records must be sorted ascending by energy")
        if sum(r.occurrences for r in self.records) != self.num_reads:
            raise ValidationError("occurrences must sum to num_reads")

    @property
    def best(self) -> SampleRecord:
        return self.records[0]


def _collate(q: QuboProblem, bits: np.ndarray, sampler_name: str, wall_time: float) -> SampleSet:
    """Group identical assignments, recompute energies, sort by (energy, bits)."""
    unique, counts = np.unique(np.asarray(bits, dtype=np.uint8), axis=0, return_counts=True)
    energies = q.energies(unique)
    order = np.argsort(energies, kind="stable")  # lexicographic bits break ties
    records = [
        SampleRecord(bits=unique[i].copy(), energy=float(energies[i]), occurrences=int(counts[i]))
        for i in order
    ]
    return SampleSet(
        records=records,
        sampler_name=sampler_name,
        wall_time=wall_time,
        num_reads=int(counts.sum()),
    )


def brute_force(q: QuboProblem) -> SampleSet:
    """Exact minimum by enumerating all 2^M assignments (M <= 24).

    Enumeration runs in vectorized chunks; ties go to the lowest assignment
    index, making the result deterministic.
    """
    m = q.dim
    if m > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(f"brute force enumerates 2^M states; dim {m} > {BRUTE_FORCE_LIMIT}")
    t0 = time.perf_counter()
    total = 1 << m
    chunk = min(total, 1 << 16)
    powers = 1 << np.arange(m, dtype=np.int64)
    best_energy = np.inf
    best_bits = None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((idx[:, None] & powers) > 0).astype(np.float64)
        energies = q.energies(bits)
        i = int(np.argmin(energies))
        if energies[i] < best_energy:
            best_energy = float(energies[i])
            best_bits = bits[i].astype(np.uint8)
    wall = time.perf_counter() - t0
    record = SampleRecord(bits=best_bits, energy=best_energy, occurrences=1)
    return SampleSet(records=[record], sampler_name="brute_force", wall_time=wall, num_reads=1)


@dataclass(frozen=True)
class SaConfig:
    """Simulated-annealing knobs; ``beta_range=None`` derives one per problem."""

    num_reads: int = 1000
    sweeps: int = 1000
    beta_range: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValidationError("num_reads must be >= 1")
        if self.sweeps < 1:
            raise ValidationError("sweeps must be >= 1")
        if self.beta_range is not None:
            hot, cold = self.beta_range
            if not (0 < hot < cold):
                raise ValidationError(f"need 0 < beta_hot < beta_cold, got {self.beta_range}")


def default_beta_range(q: QuboProblem) -> tuple[float, float]:
    """Temperature bracket from single-bit-flip energy bounds.

    Per variable the flip magnitude is at most ``|b_i| + sum_j |A_ij + A_ji|``.
    The hot end accepts the largest such move with probability ~1/2, the cold
    end accepts the smallest with probability ~1/100.
    """
    bound = np.abs(q.linear) + np.abs(q.matrix + q.matrix.T).sum(axis=1)
    positive = bound[bound > 0]
    if positive.size == 0:
        raise DegenerateQuboError("degenerate QUBO: every coefficient is zero")
    return float(np.log(2.0) / bound.max()), float(np.log(100.0) / positive.min())


_U64 = np.uint64


@numba.njit(cache=True, inline="always")
def _sm_next(state):
    # splitmix64: must match qreg.rng exactly.
    state = state + _U64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    z = z ^ (z >> _U64(31))
    return state, (z >> _U64(11)) * 2.0**-53


@numba.njit(cache=True)
def _anneal_kernel(coupling, linear, betas, read_seeds):
    m = coupling.shape[0]
    n_reads = read_seeds.shape[0]
    out = np.zeros((n_reads, m), dtype=np.uint8)
    for r in range(n_reads):
        state = read_seeds[r]
        z = np.zeros(m, dtype=np.uint8)
        fields = np.zeros(m)
        for i in range(m):
            state, u = _sm_next(state)
            if u < 0.5:
                z[i] = 1
                for j in range(m):
                    fields[j] += coupling[i, j]
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(m):
                delta = (1.0 - 2.0 * z[i]) * (linear[i] + fields[i])
                if delta <= 0.0:
                    accept = True
                else:
                    state, u = _sm_next(state)
                    accept = u < np.exp(-beta * delta)
                if accept:
                    sign = 1.0 - 2.0 * z[i]
                    z[i] = 1 - z[i]
                    for j in range(m):
                        fields[j] += sign * coupling[i, j]
        out[r] = z
    return out


def simulated_anneal(q: QuboProblem, cfg: SaConfig = SaConfig()) -> SampleSet:
    """Metropolis single-bit-flip annealing under a geometric beta schedule.

    Each of ``num_reads`` restarts starts from a random assignment and runs
    ``sweeps`` sequential passes over the bits; flip deltas come from cached
    local fields.  Read r draws its whole history from a stream derived from
    ``(cfg.seed, r)``, so results are deterministic and adding reads never
    perturbs earlier ones.
    """
    t0 = time.perf_counter()
    hot, cold = cfg.beta_range if cfg.beta_range is not None else default_beta_range(q)
    betas = np.geomspace(hot, cold, cfg.sweeps)
    coupling = q.matrix + q.matrix.T
    np.fill_diagonal(coupling, 0.0)
    linear = q.linear + np.diag(q.matrix)
    read_seeds = np.array(
        [child_seed(cfg.seed, r) for r in range(cfg.num_reads)], dtype=np.uint64
    )
    bits = _anneal_kernel(coupling, linear, betas, read_seeds)
    wall = time.perf_counter() - t0
    return _collate(q, bits, "simulated_annealing", wall)


def external_sample(
    q: QuboProblem, command: str, num_reads: int, timeout: float
) -> SampleSet:
    """Delegate a QUBO to a child process speaking the line-JSON protocol.

    The request (the QUBO wire dict plus ``num_reads``) goes to the child's
    stdin as one JSON line; the response must carry parallel ``samples``,
    ``energies`` and ``occurrences`` lists.  Every returned energy is
    re-verified against the QUBO within 1e-6 before the set is re-sorted, so
    a drifting or buggy solver cannot corrupt downstream reporting.
    """
    request = qubo_to_dict(q)
    request["num_reads"] = int(num_reads)
    payload = (json.dumps(request) + "\n").encode()
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            shlex.split(command),
            input=payload,
            capture_output=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise SamplerTimeoutError(
            f"external sampler {command!r} produced no response within {timeout} s"
        ) from exc
    except OSError as exc:
        raise SamplerProcessError(f"could not launch external sampler {command!r}: {exc}") from exc
    wall = time.perf_counter() - t0
    if proc.returncode != 0:
        stderr = proc.stderr.decode(errors="replace").strip()
        raise SamplerProcessError(
            f"external sampler exited with status {proc.returncode}: {stderr[-500:]}"
        )
    try:
        response = json.loads(proc.stdout.decode())
        samples = response["samples"]
        energies = response["energies"]
        occurrences = response["occurrences"]
        if not (len(samples) == len(energies) == len(occurrences)) or not samples:
            raise KeyError("samples/energies/occurrences must be parallel and non-empty")
    except (ValueError, KeyError, TypeError) as exc:
        raise SamplerProtocolError(f"malformed external sampler response: {exc}") from exc
    records = []
    for bits, reported, occ in zip(samples, energies, occurrences):
        z = np.asarray(bits, dtype=np.uint8)
        if z.shape != (q.dim,) or not np.all((z == 0) | (z == 1)):
            raise SamplerProtocolError(f"sample {bits!r} is not a binary vector of length {q.dim}")
        actual = q.energy(z)
        if abs(actual - float(reported)) > ENERGY_CHECK_TOL * max(1.0, abs(actual)):
            raise EnergyMismatchError(
                f"child reported energy {reported} but assignment evaluates to {actual}"
            )
        records.append(SampleRecord(bits=z, energy=actual, occurrences=int(occ)))
    records.sort(key=lambda r: (r.energy, r.bits.tolist()))
    return SampleSet(
        records=records,
        sampler_name="external",
        wall_time=wall,
        num_reads=sum(r.occurrences for r in records),
    )


def brute_sampler() -> SamplerHandle:
    """Handle running the exhaustive oracle on every call."""
    return brute_force


@dataclass
class SaSampler:
    """SA handle that derives a fresh child seed per call.

    Call i uses ``child_seed(cfg.seed, 1000 + i)`` so successive adaptive
    iterations see independent (but reproducible) streams.
    """

    cfg: SaConfig
    calls: int = field(default=0, repr=False)

    def __call__(self, q: QuboProblem) -> SampleSet:
        seed = child_seed(self.cfg.seed, 1000 + self.calls)
        self.calls += 1
        cfg = SaConfig(
            num_reads=self.cfg.num_reads,
            sweeps=self.cfg.sweeps,
            beta_range=self.cfg.beta_range,
            seed=seed,
        )
        return simulated_anneal(q, cfg)


def sa_sampler(cfg: SaConfig) -> SamplerHandle:
    return SaSampler(cfg)


def external_sampler(command: str, num_reads: int, timeout: float) -> SamplerHandle:
    def handle(q: QuboProblem) -> SampleSet:
        return external_sample(q, command, num_reads, timeout)

    return handle
