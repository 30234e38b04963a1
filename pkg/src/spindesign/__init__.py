"""Fiber-diameter modeling and inverse process design for electrospinning.

Train regression models on ingested spinning records, compare sampling
strategies and learners, and invert a target diameter band into ranked,
chemically plausible process settings via Monte Carlo search.
"""

__version__ = "0.1.0"

from .bundle import ModelBundle, load_bundle, save_bundle
from .chemistry import StrictnessPolicy, bundled_feasibility, load_feasibility
from .dataset import SpinDataset, describe, load_dataset
from .evaluation import compute_metrics, cross_validate, run_benchmark, select_best
from .imc import ImcConfig, run_imc
from .learners import LEARNER_KINDS, default_grid, train
from .pipeline import Recipe, RecipeConfig, apply_recipe, fit_recipe
from .sampling import (
    SAMPLING_METHODS,
    allocate_balanced,
    balanced_sobol_doptimal,
    federov_select,
    sample_random,
    sobol_doptimal_sample,
    sobol_points,
)

__all__ = [
    "__version__",
    "ModelBundle",
    "load_bundle",
    "save_bundle",
    "StrictnessPolicy",
    "bundled_feasibility",
    "load_feasibility",
    "SpinDataset",
    "describe",
    "load_dataset",
    "compute_metrics",
    "cross_validate",
    "run_benchmark",
    "select_best",
    "ImcConfig",
    "run_imc",
    "LEARNER_KINDS",
    "default_grid",
    "train",
    "Recipe",
    "RecipeConfig",
    "apply_recipe",
    "fit_recipe",
    "SAMPLING_METHODS",
    "allocate_balanced",
    "balanced_sobol_doptimal",
    "federov_select",
    "sample_random",
    "sobol_doptimal_sample",
    "sobol_points",
]
