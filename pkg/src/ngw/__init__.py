"""Neural solver for the inner-product Gromov-Wasserstein transport problem,
with exact Gaussian oracles, a discrete baseline, and an evaluation suite."""

from . import (
    autodiff,
    data,
    discrete,
    errors,
    gaussian,
    linalg,
    metrics,
    nn,
    seeding,
    solver,
    svg,
    validation,
)
from .estimators import DiscreteGWBaseline, NeuralGWTransport
from .gaussian import (
    GaussianSpec,
    innergw_closed_form,
    optimal_map,
    sample_gaussian_spec,
    sample_points,
)
from .metrics import bw2, bw_uvp, empirical_const, empirical_innergw, topk_accuracy
from .nn import MLP, AdamState, adam_step, grad_check
from .solver import (
    ArraySampler,
    GaussianSampler,
    Sampler,
    TrainConfig,
    TrainResult,
    init_P,
    loss_P,
    loss_T,
    loss_f,
    train,
    transport,
)

__version__ = "0.1.0"

__all__ = [
    "ArraySampler",
    "AdamState",
    "DiscreteGWBaseline",
    "GaussianSampler",
    "GaussianSpec",
    "MLP",
    "NeuralGWTransport",
    "Sampler",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "autodiff",
    "bw2",
    "bw_uvp",
    "data",
    "discrete",
    "empirical_const",
    "empirical_innergw",
    "errors",
    "gaussian",
    "grad_check",
    "init_P",
    "innergw_closed_form",
    "linalg",
    "loss_P",
    "loss_T",
    "loss_f",
    "metrics",
    "nn",
    "optimal_map",
    "sample_gaussian_spec",
    "sample_points",
    "seeding",
    "solver",
    "svg",
    "topk_accuracy",
    "train",
    "transport",
    "validation",
    "__version__",
]
