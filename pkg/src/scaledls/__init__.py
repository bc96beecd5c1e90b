"""scaledls: scaled least squares for generalized linear problems.

The package fits generalized-linear-type models by rescaling an ordinary
least squares solution instead of iterating on the full empirical risk,
converts fitted coefficients between loss families by the same scaling
trick, and ships the classical batch optimizers plus a benchmark harness
for head-to-head timing comparisons.
"""

__version__ = "0.1.0"

from ._backend import backend_name, compiled_available
from .bench import (
    ALL_METHODS,
    BenchConfig,
    BenchReport,
    CsvSpec,
    MethodRun,
    emit_report,
    run_bench,
    threshold_stats,
)
from .convert import ConversionResult, convert_glm
from .errors import (
    CsvParseError,
    CurvatureOverflowError,
    DegenerateCanonicalizationError,
    InsufficientDataError,
    NoRootError,
    NonConvergenceError,
    ScaledLSError,
    SingularDesignError,
    StalledLineSearchError,
)
from .losses import (
    BoostingLinkFamily,
    BoostingLoss,
    CanonicalizedSquareFamily,
    LinearFamily,
    LogisticFamily,
    LogLoss,
    LossFamily,
    PoissonFamily,
    ScoringRule,
    SquareLinkFamily,
    SquareLoss,
    as_family,
    canonicalize_square_loss,
    family_from_name,
    glm_eval,
    scoring_link,
    scoring_partial_losses,
)
from .optimize import (
    OptimizerConfig,
    OptimizerTrace,
    empirical_risk,
    minimize,
    risk_gradient,
    risk_hessian,
    test_error,
)
from .regression import Dataset, OlsFit, default_subsample_size, fit_ols, fit_ridge
from .sls import (
    RootTrace,
    ScaleSolveConfig,
    SlsResult,
    fit_sls,
    fit_sls_ridge,
    scale_residual,
    solve_scale,
)
from .synth import (
    DesignSpec,
    RandomSpd,
    WellSpread,
    load_csv,
    random_spd_root,
    sample_dataset,
    write_csv,
)

__all__ = [
    "__version__",
    "backend_name",
    "compiled_available",
    "ALL_METHODS",
    "BenchConfig",
    "BenchReport",
    "CsvSpec",
    "MethodRun",
    "emit_report",
    "run_bench",
    "threshold_stats",
    "ConversionResult",
    "convert_glm",
    "CsvParseError",
    "CurvatureOverflowError",
    "DegenerateCanonicalizationError",
    "InsufficientDataError",
    "NoRootError",
    "NonConvergenceError",
    "ScaledLSError",
    "SingularDesignError",
    "StalledLineSearchError",
    "BoostingLinkFamily",
    "BoostingLoss",
    "CanonicalizedSquareFamily",
    "LinearFamily",
    "LogisticFamily",
    "LogLoss",
    "LossFamily",
    "PoissonFamily",
    "ScoringRule",
    "SquareLinkFamily",
    "SquareLoss",
    "as_family",
    "canonicalize_square_loss",
    "family_from_name",
    "glm_eval",
    "scoring_link",
    "scoring_partial_losses",
    "OptimizerConfig",
    "OptimizerTrace",
    "empirical_risk",
    "minimize",
    "risk_gradient",
    "risk_hessian",
    "test_error",
    "Dataset",
    "OlsFit",
    "default_subsample_size",
    "fit_ols",
    "fit_ridge",
    "RootTrace",
    "ScaleSolveConfig",
    "SlsResult",
    "fit_sls",
    "fit_sls_ridge",
    "scale_residual",
    "solve_scale",
    "DesignSpec",
    "RandomSpd",
    "WellSpread",
    "load_csv",
    "random_spd_root",
    "sample_dataset",
    "write_csv",
]
