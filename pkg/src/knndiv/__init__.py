"""Direct estimation of density functionals from k-NN classifier error rates.

Error rates of k-NN classifiers converge to known functionals of the class
posterior, so a linear combination of them can estimate quantities like the
squared Hellinger distance without ever estimating a density. An ensemble of
estimates over subsample fractions, with weights solved from a small convex
program, cancels the slow finite-sample bias that otherwise dominates in
higher dimensions.
"""

from .basis import (
    BasisCoefficients,
    BasisRankError,
    TargetFunctional,
    evaluate_basis_fit,
    fit_alpha,
    g_hellinger,
    get_target,
    r_k,
    register_target,
)
from .estimator import FunctionalEstimate, estimate_functional, phi_k, variance_bound
from .experiments import (
    DatasetFormatError,
    ResultRow,
    SimulationConfig,
    emit_results,
    load_config,
    load_dataset,
    run_simulation,
)
from .knn import (
    ErrorRateTable,
    NeighborIndex,
    SplitDataset,
    build_index,
    error_table,
    holdout_error_rate,
    knn_predict,
    subsampled_error_rate,
)
from .model import (
    DistributionPair,
    GaussianSpec,
    LabeledDataset,
    build_ar_covariance,
    functional_ground_truth_mc,
    hellinger_squared_gaussian,
    posterior_eta,
    sample,
)
from .weights import (
    EnsembleConfig,
    EnsembleWeights,
    InfeasibleConfigError,
    SolverError,
    constraint_exponents,
    exact_weights,
    relaxed_weights,
)

__version__ = "0.1.0"

__all__ = [
    "BasisCoefficients",
    "BasisRankError",
    "DatasetFormatError",
    "DistributionPair",
    "EnsembleConfig",
    "EnsembleWeights",
    "ErrorRateTable",
    "FunctionalEstimate",
    "GaussianSpec",
    "InfeasibleConfigError",
    "LabeledDataset",
    "NeighborIndex",
    "ResultRow",
    "SimulationConfig",
    "SolverError",
    "SplitDataset",
    "TargetFunctional",
    "build_ar_covariance",
    "build_index",
    "constraint_exponents",
    "emit_results",
    "error_table",
    "estimate_functional",
    "evaluate_basis_fit",
    "exact_weights",
    "fit_alpha",
    "functional_ground_truth_mc",
    "g_hellinger",
    "get_target",
    "hellinger_squared_gaussian",
    "holdout_error_rate",
    "knn_predict",
    "load_config",
    "load_dataset",
    "phi_k",
    "posterior_eta",
    "r_k",
    "register_target",
    "relaxed_weights",
    "run_simulation",
    "sample",
    "subsampled_error_rate",
    "variance_bound",
    "__version__",
]
