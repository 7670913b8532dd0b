"""PCA for heterogeneously missing data.

Estimates the leading principal eigenspace of a covariance matrix from a
partially observed data matrix: inverse-probability weighted spectral
estimators, an iterative impute-and-refine algorithm, matrix-completion
baselines, and a seeded Monte Carlo experiment harness.
"""

__version__ = "0.1.0"

from .baselines import ImputeConfig, hard_impute, oracle_lambda, soft_impute
from .data import (
    DataFormatError,
    PartialMatrix,
    RowIndexSets,
    ScoreMatrix,
    coobservation_counts,
    load_partial,
    observed_fraction,
    row_index_sets,
    save_partial,
)
from .estimators import (
    PrimeConfig,
    ScreeningEmptyError,
    TrajectoryReport,
    center_columns,
    estimate_scores,
    incoherence,
    init_covariance,
    init_estimator,
    init_weights,
    ipw_covariance,
    prime_pca,
    reconstruct_covariance,
    refine,
    screen_rows,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    HardImputeMethod,
    InitMethod,
    MethodReport,
    PrimePcaMethod,
    SoftImputeOracleMethod,
    experiment_from_dict,
    experiment_to_dict,
    run_experiment,
)
from .linalg import (
    OperatorNorms,
    SvdError,
    SvdFactors,
    hadamard,
    hadamard_inverse,
    is_orthonormal,
    operator_norms,
    principal_angle_cosines,
    procrustes_align,
    pseudoinverse,
    sin_theta_loss,
    thin_svd,
    top_k_eigenvectors,
    two_to_inf_distance,
)
from .simulate import (
    BlockSign,
    CheckerColumns,
    CheckerRows,
    DataModelSpec,
    ExplicitFrame,
    ExplicitProbs,
    GaussianEigvecs,
    Homogeneous,
    MissingnessSpec,
    RowColProduct,
    TwoPattern,
    build_frame,
    generate_data,
    generate_mask,
    rng_split,
)

__all__ = [name for name in dir() if not name.startswith("_")]
