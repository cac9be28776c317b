"""Kernel method-of-moments estimation with entropy-regularized MMD profiles."""

__version__ = "0.1.0"

from .data import Dataset
from .divergences import CHI2, KL, LOG, DivergenceSpec, get_divergence
from .errors import (
    BarrierViolation,
    ConfigError,
    DivergedError,
    DomainError,
    InfeasibleError,
    MomentForgeError,
)
from .instruments import Instrument, const_instrument, mlp_instrument, rff_instrument
from .kernels import KernelSpec, RFFMap, gram, median_heuristic, mmd_squared, rff_apply, rff_build
from .kmm import KMMConfig, build_components, expand_grid, fit_kmm, fit_kmm_selected
from .models import (
    MomentModel,
    get_model,
    hetero_iv_model,
    iv_residual_model,
    linear_iv_model,
    mean_model,
    mlp_model,
)
from .objective import DualState, ObjectiveConfig, dual_objective, grad_beta, grad_theta
from .optimizer import AnnealSchedule, FitResult, GDAConfig, anneal_schedule, fit
from .reference import (
    ReferenceMeasure,
    empirical_reference,
    fit_kde,
    mixture_reference,
    uniform_box_reference,
)
from .validation import GridResult, grid_search, hsic, mmr_metric

__all__ = [
    "AnnealSchedule",
    "BarrierViolation",
    "CHI2",
    "ConfigError",
    "Dataset",
    "DivergedError",
    "DivergenceSpec",
    "DomainError",
    "DualState",
    "FitResult",
    "GDAConfig",
    "GridResult",
    "InfeasibleError",
    "Instrument",
    "KL",
    "KMMConfig",
    "KernelSpec",
    "LOG",
    "MomentForgeError",
    "MomentModel",
    "ObjectiveConfig",
    "RFFMap",
    "ReferenceMeasure",
    "anneal_schedule",
    "build_components",
    "const_instrument",
    "dual_objective",
    "empirical_reference",
    "expand_grid",
    "fit",
    "fit_kde",
    "fit_kmm",
    "fit_kmm_selected",
    "get_divergence",
    "get_model",
    "grad_beta",
    "grad_theta",
    "gram",
    "grid_search",
    "hetero_iv_model",
    "hsic",
    "iv_residual_model",
    "linear_iv_model",
    "mean_model",
    "median_heuristic",
    "mixture_reference",
    "mlp_instrument",
    "mlp_model",
    "mmd_squared",
    "mmr_metric",
    "rff_apply",
    "rff_build",
    "rff_instrument",
    "uniform_box_reference",
    "__version__",
]
