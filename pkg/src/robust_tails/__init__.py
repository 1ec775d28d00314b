"""Robust tail bounds: GPD tail fitting and worst-case exceedance probabilities
over Wasserstein and f-divergence ambiguity sets."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .divergences import (
    DivergenceSpec,
    boundary_values,
    divergence_discrete,
    f_inverse_tail,
    f_raw,
    f_tilted,
    lambert_w,
    renyi_radius,
)
from .evt import (
    ExtrapolationError,
    FitError,
    FitResult,
    NoExceedancesError,
    Sample,
    TailModel,
    WorstCaseCurve,
    empirical_cdf,
    fit_gpd_mle,
    load_sample_csv,
    mean_excess_curve,
    return_level,
    survival,
)
from .fdiv import FDivBoundResult, TailDescription, closed_form_params, solve_bx, solve_ell
from .radius import (
    RadiusEstimate,
    estimate_delta_knn_hellinger,
    estimate_delta_wasserstein,
    select_alpha,
)
from .wasserstein import WassersteinBoundResult, solve_U, wasserstein_distorted

__all__ = [
    "BACKEND",
    "DivergenceSpec",
    "ExtrapolationError",
    "FDivBoundResult",
    "FitError",
    "FitResult",
    "NoExceedancesError",
    "RadiusEstimate",
    "Sample",
    "TailDescription",
    "TailModel",
    "WassersteinBoundResult",
    "WorstCaseCurve",
    "boundary_values",
    "closed_form_params",
    "divergence_discrete",
    "empirical_cdf",
    "estimate_delta_knn_hellinger",
    "estimate_delta_wasserstein",
    "f_inverse_tail",
    "f_raw",
    "f_tilted",
    "fit_gpd_mle",
    "lambert_w",
    "load_sample_csv",
    "mean_excess_curve",
    "renyi_radius",
    "return_level",
    "select_alpha",
    "solve_U",
    "solve_bx",
    "solve_ell",
    "survival",
    "wasserstein_distorted",
]
