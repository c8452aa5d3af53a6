"""Functional continuum regression for scalar-on-function linear models.

The continuum parameter ``alpha`` in ``[0, 1)`` moves the fitted basis from
ordinary least squares (``alpha = 0``) through partial least squares
(``alpha = 1/2``) towards principal component regression (``alpha -> 1``).
"""

__version__ = "0.1.0"

from .baselines import BaselineModel, fpcr_fit, fpls_fit
from .continuum import (
    ComponentFit,
    FCRModel,
    SearchOptions,
    deflate,
    fit,
    fit_component,
    init_state,
    iter_components,
    log_q,
    maximize_delta,
    predict,
    weight_from_delta,
)
from .errors import (
    DataFormatError,
    DegenerateComponentError,
    DegenerateCovarianceError,
    DimensionError,
    EmptyDatasetError,
    FCRError,
    InvalidGridError,
    InvalidSNRError,
    NoSignalError,
    NumericalError,
    OrthogonalityAssumptionError,
    PoleError,
    SaturatedModelError,
    TuningFailedError,
    UndefinedObjectiveError,
)
from .fgrid import (
    EigenSystem,
    FunctionalDataset,
    Grid,
    center,
    eigen,
    eigen_from_data,
    empirical_cov,
    inner_product,
    norm,
    trapezoid_weights,
)
from .oracle import brute_force, log_t_star, t_star
from .simulate import (
    GenerativeModel,
    StudyReport,
    kl_sample,
    make_response,
    remspe,
    run_estimation_study,
    run_prediction_study,
    surrogate_model,
)
from .tuning import TuningGrid, TuningReport, gcv, tune

__all__ = [
    "BaselineModel",
    "ComponentFit",
    "DataFormatError",
    "DegenerateComponentError",
    "DegenerateCovarianceError",
    "DimensionError",
    "EigenSystem",
    "EmptyDatasetError",
    "FCRError",
    "FCRModel",
    "FunctionalDataset",
    "GenerativeModel",
    "Grid",
    "InvalidGridError",
    "InvalidSNRError",
    "NoSignalError",
    "NumericalError",
    "OrthogonalityAssumptionError",
    "PoleError",
    "SaturatedModelError",
    "SearchOptions",
    "StudyReport",
    "TuningFailedError",
    "TuningGrid",
    "TuningReport",
    "UndefinedObjectiveError",
    "brute_force",
    "center",
    "deflate",
    "eigen",
    "eigen_from_data",
    "empirical_cov",
    "fit",
    "fit_component",
    "fpcr_fit",
    "fpls_fit",
    "gcv",
    "init_state",
    "inner_product",
    "iter_components",
    "kl_sample",
    "log_q",
    "log_t_star",
    "make_response",
    "maximize_delta",
    "norm",
    "predict",
    "remspe",
    "run_estimation_study",
    "run_prediction_study",
    "surrogate_model",
    "t_star",
    "trapezoid_weights",
    "tune",
    "weight_from_delta",
]
