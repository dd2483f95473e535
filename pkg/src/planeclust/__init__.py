"""Robust fuzzy local k-plane clustering with baselines, metrics and benchmarks."""

from .baselines import RegressionModel, fcrm_fit, fkpc_fit, kpc_fit
from .core import (
    Dataset,
    DegenerateClusterError,
    FitReport,
    HyperParams,
    InvalidInputError,
    Membership,
    NumericalFailureError,
    PlaneModel,
    hard_labels,
    minmax_normalize,
)
from .datagen import SyntheticSpec, generate, true_planes
from .init import InitState, init_from_assignment, kmeans
from .metrics import accuracy, ari, nmi, purity, score
from .rflkpc import fit

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DegenerateClusterError", "FitReport", "HyperParams", "InitState",
    "InvalidInputError", "Membership", "NumericalFailureError", "PlaneModel",
    "RegressionModel", "SyntheticSpec", "accuracy", "ari", "fcrm_fit", "fit",
    "fkpc_fit", "generate", "hard_labels", "init_from_assignment", "kmeans",
    "kpc_fit", "minmax_normalize", "nmi", "purity", "score", "true_planes",
]
