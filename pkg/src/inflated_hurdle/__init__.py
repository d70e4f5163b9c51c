"""Hurdle regression for count data with multiple inflated values.

A logit model separates zeros from positive counts; the positive counts
follow a finite mixture of point masses at chosen inflated values and a
zero-truncated NB2 negative binomial, with every parameter driven by
covariates. The package covers maximum-likelihood fitting, model selection
across inflated-value sets, prediction with delta-method standard errors,
predictive margins, hanging-rootogram diagnostics, and seeded simulation.
"""

__version__ = "0.1.0"

from .distributions import (
    InflatedValues,
    hurdle_pmf,
    inflated_tnb_logpmf,
    inflated_tnb_pmf,
    mixture_weights,
    nb2_logpmf,
    nb2_pmf,
    tnb_logpmf,
    tnb_mean,
    tnb_pmf,
)
from .estimation import (
    FitOptions,
    FitResult,
    fit_model,
    information_criteria,
    starting_values,
)
from .estimator import InflatedHurdleRegressor
from .inference import MarginTable, PredictionTable, delta_se, predict, predictive_margins
from .model_spec import (
    ColumnSchema,
    DataError,
    Dataset,
    ModelSpec,
    SpecError,
    build_design,
    load_csv,
    load_model_config,
    validate_inflated,
)
from .selection import (
    ComparisonTable,
    RootogramTable,
    compare,
    detect_spike_candidates,
    rootogram,
    rootogram_svg,
)
from .simulation import (
    CategoricalGen,
    NormalGen,
    SimulationDesign,
    UniformGen,
    load_simulation_design,
    simulate,
)

__all__ = [
    "__version__",
    "InflatedValues",
    "nb2_logpmf",
    "nb2_pmf",
    "tnb_logpmf",
    "tnb_pmf",
    "tnb_mean",
    "mixture_weights",
    "inflated_tnb_logpmf",
    "inflated_tnb_pmf",
    "hurdle_pmf",
    "Dataset",
    "ColumnSchema",
    "ModelSpec",
    "DataError",
    "SpecError",
    "load_csv",
    "load_model_config",
    "build_design",
    "validate_inflated",
    "FitOptions",
    "FitResult",
    "fit_model",
    "starting_values",
    "information_criteria",
    "InflatedHurdleRegressor",
    "PredictionTable",
    "MarginTable",
    "predict",
    "delta_se",
    "predictive_margins",
    "ComparisonTable",
    "RootogramTable",
    "compare",
    "detect_spike_candidates",
    "rootogram",
    "rootogram_svg",
    "SimulationDesign",
    "NormalGen",
    "UniformGen",
    "CategoricalGen",
    "simulate",
    "load_simulation_design",
]
