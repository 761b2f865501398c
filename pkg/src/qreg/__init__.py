"""qreg: linear regression via QUBO encoding with adaptive precision vectors.

The pipeline: generate or load a dataset, reduce it to Gram sufficient
statistics, encode the least-squares objective as a QUBO over binary weight
selectors, minimize with a sampler (exhaustive, simulated annealing, or an
external process), and optionally tune per-coefficient precision vectors
with the adaptive loop.  Classical closed-form and SGD solvers share the
same statistics and R^2 metric for apples-to-apples comparison.
"""

from .adaptive import AdaptiveConfig, AdaptiveState, IterationRecord, adaptive_fit, initial_weights_from_fixed, solve_fixed
from .bench import ExperimentPlan, ResultRow, grid_search, load_results, run_benchmark
from .dataset import (
    DatasetFile,
    GramSystem,
    SyntheticSpec,
    TrueModel,
    accumulate_gram,
    generate_dataset,
    generate_rows,
    generate_to_file,
    gram_from_arrays,
    load_dataset,
    merge_gram,
    save_dataset,
    true_model_for,
)
from .encoding import (
    PrecisionSpec,
    QuboProblem,
    build_qubo,
    centered_precision,
    decode_weights,
    expand_precision_matrix,
    qubo_to_dict,
    representable_grid,
    uniform_precision,
)
from .regression import SgdConfig, r_squared, rss, solve_closed_form, solve_sgd
from .reporting import report
from .samplers import (
    SaConfig,
    SampleRecord,
    SampleSet,
    brute_force,
    brute_sampler,
    default_beta_range,
    external_sample,
    external_sampler,
    sa_sampler,
    simulated_anneal,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
