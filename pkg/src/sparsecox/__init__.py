"""Sparse high-dimensional Cox proportional-hazards estimation.

The pipeline runs in four stages, each usable on its own:

1. :func:`fit_dantzig` solves the l1-minimal coefficient vector whose
   partial-likelihood score is uniformly small (a Dantzig selector for
   the Cox model), with :func:`select_support` thresholding the result.
2. :func:`refit_mle` re-estimates on the selected coordinates by Newton
   iteration and reports Wald intervals from the restricted information
   matrix.
3. :func:`breslow_estimate` turns a converged refit into a cumulative
   baseline hazard with pointwise variances, both the martingale part
   and the total that accounts for coefficient estimation.
4. :mod:`sparsecox.diagnostics` and :mod:`sparsecox.simulation` check
   the assumptions behind the inference: compatibility factors of the
   information matrix, martingale residuals, and Monte Carlo studies of
   selection, normality, and coverage.

:class:`DantzigCox` bundles stages 1 to 3 behind a scikit-learn style
estimator; the ``sparsecox`` command line exposes the same pipeline plus
the study harness.
"""

from .dantzig import (
    DantzigFit,
    SolverControl,
    TuningSchedule,
    fit_dantzig,
    gamma_path,
    gamma_value,
)
from .dataset import (
    CovariatePath,
    IngestOptions,
    Subject,
    SurvivalDataset,
    TieAdjustment,
    counting_process,
    event_times,
    load_csv,
    save_csv,
)
from .diagnostics import (
    ConeProblem,
    compatibility_factor,
    martingale_residuals,
    matrix_sup_distance,
)
from .estimator import DantzigCox
from .exceptions import (
    DataIngestionError,
    GammaInfeasibleError,
    NoEventsError,
    ScoreOverflowError,
    SingularInformationError,
    SparseCoxError,
    UnconvergedFitError,
)
from .hazard import (
    HazardEstimate,
    breslow_at,
    breslow_estimate,
    hazard_confidence_band,
    nelson_aalen,
)
from .partial_likelihood import (
    evaluate,
    log_partial_likelihood,
    neg_hessian,
    score,
    score_process,
)
from .refit import (
    NewtonControl,
    RefitResult,
    SelectedSupport,
    refit_mle,
    select_support,
    wald_inference,
)
from .simulation import (
    EstimatorSettings,
    GeneratorConfig,
    McReport,
    TruthRecord,
    generate,
    population_info,
    run_mc_study,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # dataset
    "CovariatePath",
    "Subject",
    "SurvivalDataset",
    "IngestOptions",
    "TieAdjustment",
    "load_csv",
    "save_csv",
    "counting_process",
    "event_times",
    # partial likelihood
    "evaluate",
    "log_partial_likelihood",
    "score",
    "neg_hessian",
    "score_process",
    # selector
    "TuningSchedule",
    "SolverControl",
    "DantzigFit",
    "gamma_value",
    "gamma_path",
    "fit_dantzig",
    # refit
    "SelectedSupport",
    "NewtonControl",
    "RefitResult",
    "select_support",
    "refit_mle",
    "wald_inference",
    # hazard
    "HazardEstimate",
    "breslow_estimate",
    "breslow_at",
    "nelson_aalen",
    "hazard_confidence_band",
    # diagnostics
    "ConeProblem",
    "compatibility_factor",
    "matrix_sup_distance",
    "martingale_residuals",
    # simulation
    "GeneratorConfig",
    "TruthRecord",
    "EstimatorSettings",
    "McReport",
    "generate",
    "population_info",
    "run_mc_study",
    # estimator
    "DantzigCox",
    # exceptions
    "SparseCoxError",
    "DataIngestionError",
    "NoEventsError",
    "ScoreOverflowError",
    "GammaInfeasibleError",
    "SingularInformationError",
    "UnconvergedFitError",
]
