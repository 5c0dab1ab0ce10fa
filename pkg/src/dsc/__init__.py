"""Distributional synthetic controls: quantile-function synthetic control estimation and inference."""
from .errors import ComputationError, DomainError, DscError, InputError
from .quantile import (
    EmpiricalSample,
    StepQuantileFn,
    evaluate,
    gini,
    integrated_quantile,
    interquartile_range,
    lorenz,
    mean,
    quantile_effect,
    quantile_fn,
)
from .wasserstein import barycenter, merged_grid, w2_distance, w2_squared
from .solver import FitConfig, SimplexWeights, aggregate_weights, fit_period, fit_period_mc
from .estimator import DscResult, PanelDataset, att, classical_sc, effect_curves, fit_dsc
from .inference import (
    TestReport,
    brownian_bridge_paths,
    confidence_band,
    density_at_quantiles,
    discrete_equality_test,
    dominance_test,
    equality_test,
    split_sample_pre_test,
)
from .placebo import PlaceboReport, placebo_test
from .simharness import (
    SimSpec,
    gen_binomial_panel,
    gen_gaussian_mixture_panel,
    hull_residual,
    sparsity_metric,
)

__version__ = "0.1.0"
