import numpy as np
import pytest

from qreg import SaConfig, SyntheticSpec, accumulate_gram, build_qubo, generate_rows, simulated_anneal, uniform_precision


@pytest.fixture(scope="session", autouse=True)
def warm_sa_kernel():
    """Compile the annealing kernel once so timed tests measure the algorithm."""
    spec = SyntheticSpec(n_rows=50, n_features=2, noise_sigma=0.1, seed=0)
    stats = accumulate_gram(generate_rows(spec))
    q = build_qubo(stats, uniform_precision(stats.dim, 2))
    simulated_anneal(q, SaConfig(num_reads=2, sweeps=5, seed=0))


@pytest.fixture
def small_dataset():
    """In-memory (X, y, stats) for a well-behaved 200x4 problem."""
    spec = SyntheticSpec(n_rows=200, n_features=3, noise_sigma=0.05, seed=11)
    chunks = list(generate_rows(spec))
    x = np.vstack([c[0] for c in chunks])
    y = np.concatenate([c[1] for c in chunks])
    return x, y, accumulate_gram([(x, y)])


def random_problem(rng: np.random.Generator, n: int, d: int, noise: float = 0.1):
    """Small random regression instance with bias column; returns (x, y)."""
    x = np.hstack([np.ones((n, 1)), rng.standard_normal((n, d))])
    w = rng.random(d + 1)
    y = x @ w + noise * rng.standard_normal(n)
    return x, y
