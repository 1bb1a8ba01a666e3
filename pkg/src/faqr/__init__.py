"""Factor-augmented quantile regression.

Latent factors are extracted from a wide observation matrix by
principal components, the response is regressed on the estimated
idiosyncratic parts and factors with a convolution-smoothed quantile
loss under an l1 penalty, the penalty level is tuned by a pivotal
simulation, and the adequacy of the factor-only model is testable by
multiplier or residual bootstrap.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateSpectrum,
    DimensionError,
    FaqrError,
    InnerLoopStall,
    InputError,
    MissingValue,
    NonFinite,
    NonSmoothKernel,
    NumericalError,
    ParseError,
    RankDeficient,
    Singular,
    WindowTooLarge,
)
from .factor_model import (
    DataMatrix,
    FactorModel,
    default_m_max,
    estimate_factors,
    select_num_factors,
)
from .inference import (
    AdequacyResult,
    adequacy_test_multiplier,
    adequacy_test_residual,
    fit_factor_only,
    score_statistic,
    weighted_project,
)
from .smoothed_loss import (
    KernelSpec,
    QuantileProblem,
    check_loss,
    default_bandwidth,
    kernel_cdf,
    kernel_density,
    loss_gradient,
    loss_hessian,
    loss_value,
    smoothed_check,
)
from .solver import (
    FaqrFit,
    SolverConfig,
    fit_penalized,
    kkt_residual,
    lamm_iterate,
    majorization_holds,
    soft_threshold,
    warm_start_expectile,
)
from .tuning import LambdaRule, select_lambda, simulate_pivotal

__all__ = [
    "AdequacyResult",
    "DataMatrix",
    "DegenerateSpectrum",
    "DimensionError",
    "FactorModel",
    "FaqrError",
    "FaqrFit",
    "InnerLoopStall",
    "InputError",
    "KernelSpec",
    "LambdaRule",
    "MissingValue",
    "NonFinite",
    "NonSmoothKernel",
    "NumericalError",
    "ParseError",
    "QuantileProblem",
    "RankDeficient",
    "Singular",
    "SolverConfig",
    "WindowTooLarge",
    "adequacy_test_multiplier",
    "adequacy_test_residual",
    "check_loss",
    "default_bandwidth",
    "default_m_max",
    "estimate_factors",
    "fit_factor_only",
    "fit_penalized",
    "kernel_cdf",
    "kernel_density",
    "kkt_residual",
    "lamm_iterate",
    "loss_gradient",
    "loss_hessian",
    "loss_value",
    "majorization_holds",
    "score_statistic",
    "select_lambda",
    "select_num_factors",
    "simulate_pivotal",
    "smoothed_check",
    "soft_threshold",
    "warm_start_expectile",
    "weighted_project",
]
