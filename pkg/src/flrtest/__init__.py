"""Estimation and self-normalized relevant-hypothesis testing for
functional linear regression on discretized function spaces.

The model is Y_n = S X_n + error_n with X, Y curves observed on finite
grids. The package estimates S by spectral cut-off, tests relevant
hypotheses about the distance of S from a benchmark (in operator norm
geometry or prediction geometry), locates slope change points by CUSUM,
and reproduces the benchmark Monte Carlo rejection curves.
"""

from .changepoint import (
    ChangePointFit,
    SplitPlan,
    concat_datasets,
    cusum_theta,
    split_slope,
    test_cp_location,
    test_cp_prediction,
)
from .dataio import (
    format_curve_csv,
    format_test_result,
    read_data_csv,
    read_kernel_csv,
    read_quantile_table,
    write_data_csv,
    write_kernel_csv,
    write_quantile_table,
)
from .errors import (
    ConfigError,
    DegenerateNormalizerError,
    FlrError,
    FormatError,
    InsufficientPrefixError,
    NonPsdError,
    RankDeficiencyError,
    SpaceMismatchError,
    UndefinedRatioError,
)
from .regression import (
    Dataset,
    SlopeFit,
    center_prefix,
    distance_path,
    distance_stat,
    pred_distance_stat,
    slope_estimate,
)
from .selfnorm import (
    NuMeasure,
    QuantileTable,
    TestResult,
    default_nu,
    normalizer,
    test_location,
    test_prediction,
    w_quantile,
)
from .simulate import (
    RejectionCurve,
    SimConfig,
    ar1_lift,
    benchmark_null_slope,
    benchmark_space,
    benchmark_true_slope,
    beta_shift_regressors,
    gamma_oracle,
    gen_dataset,
    kernel_op_from_fn,
    ou_errors,
    rejection_curve,
    rel_explanation,
    rel_explanation_pred,
)
from .space import (
    FuncObs,
    KernelOp,
    MeasureSpace,
    apply_op,
    compose,
    func,
    hs_inner,
    hs_norm,
    identity_op,
    inner,
    norm,
    op_norm,
    outer,
    uniform_grid_space,
)
from .spectral import (
    EigenSystem,
    covariance_prefix,
    eigensystem,
    prefix_count,
    projection,
    regularized_inverse,
    sqrt_op,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # spaces and operators
    "MeasureSpace",
    "FuncObs",
    "KernelOp",
    "uniform_grid_space",
    "func",
    "inner",
    "norm",
    "outer",
    "apply_op",
    "compose",
    "hs_inner",
    "hs_norm",
    "op_norm",
    "identity_op",
    # spectral calculus
    "EigenSystem",
    "prefix_count",
    "covariance_prefix",
    "eigensystem",
    "regularized_inverse",
    "projection",
    "sqrt_op",
    # regression
    "Dataset",
    "SlopeFit",
    "center_prefix",
    "slope_estimate",
    "distance_stat",
    "pred_distance_stat",
    "distance_path",
    # self-normalization
    "NuMeasure",
    "default_nu",
    "QuantileTable",
    "TestResult",
    "normalizer",
    "w_quantile",
    "test_location",
    "test_prediction",
    # change points
    "ChangePointFit",
    "SplitPlan",
    "cusum_theta",
    "split_slope",
    "test_cp_location",
    "test_cp_prediction",
    "concat_datasets",
    # simulation
    "SimConfig",
    "RejectionCurve",
    "benchmark_space",
    "benchmark_null_slope",
    "benchmark_true_slope",
    "kernel_op_from_fn",
    "beta_shift_regressors",
    "ou_errors",
    "ar1_lift",
    "gen_dataset",
    "gamma_oracle",
    "rel_explanation",
    "rel_explanation_pred",
    "rejection_curve",
    # file formats
    "read_data_csv",
    "write_data_csv",
    "read_kernel_csv",
    "write_kernel_csv",
    "read_quantile_table",
    "write_quantile_table",
    "format_test_result",
    "format_curve_csv",
    # errors
    "FlrError",
    "SpaceMismatchError",
    "InsufficientPrefixError",
    "RankDeficiencyError",
    "NonPsdError",
    "DegenerateNormalizerError",
    "UndefinedRatioError",
    "ConfigError",
    "FormatError",
]
