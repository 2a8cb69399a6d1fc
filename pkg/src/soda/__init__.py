"""Stepwise selection of main and quadratic interaction terms for
multinomial logistic and quadratic discriminant models, with a sliced
variant for continuous responses."""

from .core import (
    DataError,
    Dataset,
    DimensionMismatch,
    IndexOutOfRange,
    NewtonOptions,
    SelectionConfig,
    SodaError,
    Term,
    TermSet,
    induced_term_set,
    predictors_of,
)
from .glm import (
    ModelFit,
    NotPositiveDefinite,
    QuadraticDiscriminant,
    RankDeficientError,
    SeparationError,
    augment,
    ebic,
    fit_mle,
    log_likelihood,
    qda_to_logistic,
    score_and_hessian,
)
from .selector import (
    SelectionResult,
    TraceStep,
    cv_select_gamma,
    soda_select,
    stage1_preliminary,
    stage2_forward,
    stage3_backward,
)
from .ssoda import (
    HTooLarge,
    SlicedModel,
    SliceTooSmall,
    fit_sliced_gaussian,
    predict,
    s_soda_select,
    slice_response,
)

__version__ = "0.1.0"
