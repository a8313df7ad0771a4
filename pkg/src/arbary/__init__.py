"""Parametric (AR) optimal-transport barycenters of power spectral densities."""

from .ar import (
    ArModel,
    ar_to_parcor,
    ar_to_psd,
    burg_estimate,
    is_stable,
    levinson_durbin,
    parcor_to_ar,
    simulate_ar,
    theta_to_model,
    yule_walker,
)
from .centroid import (
    FitResult,
    InitStrategy,
    MultiStartReport,
    OptimizerConfig,
    default_portfolio,
    fit,
    multi_start_fit,
    objective_and_gradient,
    order_sweep,
    yw_initialize,
)
from .classify import LabeledPsdSet, MetricsReport, evaluate, fit_centroids, metrics_from_scores
from .config import RunConfig, load_config
from .errors import ArbaryError, ConvergenceError, DegenerateInput, InstabilityError, InvalidArgument
from .ot import (
    SinkhornConfig,
    barycenter_objective,
    brute_force_entropic,
    free_barycenter,
    marginal_gradient,
    sinkhorn,
)
from .spectral import FrequencyGrid, GroundCost, Psd, baseline_distance, build_cost, circular_cost, make_grid, normalize
from .synth import SynthSpec, synth_ar_targets, synth_classes

__version__ = "0.1.0"
