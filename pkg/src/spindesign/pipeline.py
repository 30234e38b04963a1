"""Leakage-free preprocessing recipe.

A :class:`Recipe` is fitted on training rows only and then replayed
identically on CV folds, the hold-out test set, and inverse-search
candidates. Steps run in a fixed order: novel-level handling, rare-level
consolidation, one-hot encoding, median imputation, zero-variance
removal, centering/scaling of numeric columns, then optional PCA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .dataset import (
    CATEGORICAL_COLUMNS,
    NUMERIC_COLUMNS,
    OUTCOME_COLUMN,
    PROVENANCE_COLUMN,
)

OTHER_LEVEL = "__other__"
MAX_PCA_COMPONENTS = 20


class RecipeError(ValueError):
    pass


@dataclass(frozen=True)
class RecipeConfig:
    """Options for :func:`fit_recipe`.

    rare_level_threshold: categorical levels seen in fewer than this
    fraction of training rows are pooled into an "other" level.
    pca_components: number of principal components to keep (None = no
    PCA); capped at 20.
    """

    rare_level_threshold: float = 0.01
    pca_components: int | None = None

    def __post_init__(self):
        if not 0 <= self.rare_level_threshold < 1:
            raise RecipeError("rare_level_threshold must be in [0, 1)")
        if self.pca_components is not None and self.pca_components < 1:
            raise RecipeError("pca_components must be >= 1 when set")


@dataclass
class Recipe:
    """Fitted preprocessing transform; immutable once fitted."""

    config: RecipeConfig
    vocabularies: dict[str, list[str]] = field(default_factory=dict)
    medians: dict[str, float] = field(default_factory=dict)
    encoded_columns: list[str] = field(default_factory=list)
    retained: list[int] = field(default_factory=list)  # post-encoding column indexes kept
    scale_means: dict[str, float] = field(default_factory=dict)
    scale_stds: dict[str, float] = field(default_factory=dict)
    pca_basis: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)
    fitted: bool = False

    @property
    def output_columns(self) -> list[str]:
        """Column names of the matrix produced by :func:`apply_recipe`."""
        if self.pca_basis is not None:
            return [f"pc_{i + 1}" for i in range(self.pca_basis.shape[1])]
        return [self.encoded_columns[i] for i in self.retained]


def _categorical_value(value: object) -> str:
    if value is None:
        return ""
    text = str(value).strip()
    return "" if text.lower() in ("nan", "none", "null") else text


def _encode(recipe: Recipe, rows: pd.DataFrame) -> tuple[np.ndarray, list[str]]:
    """Assemble the pre-removal design matrix (indicators + imputed numerics)."""
    n = len(rows)
    blocks: list[np.ndarray] = []
    names: list[str] = []

    for col in CATEGORICAL_COLUMNS:
        vocab = recipe.vocabularies[col]
        levels = rows[col].map(_categorical_value) if col in rows else pd.Series([""] * n)
        known = set(vocab)
        mapped = levels.map(lambda v: v if v in known else OTHER_LEVEL)
        block = np.zeros((n, len(vocab) + 1))
        index = {level: j for j, level in enumerate(vocab + [OTHER_LEVEL])}
        for i, level in enumerate(mapped):
            block[i, index[level]] = 1.0
        blocks.append(block)
        names.extend([f"{col}={level}" for level in vocab] + [f"{col}={OTHER_LEVEL}"])

    for col in NUMERIC_COLUMNS:
        values = pd.to_numeric(rows[col], errors="coerce").to_numpy(dtype=float)
        values = np.where(np.isfinite(values), values, recipe.medians[col])
        blocks.append(values.reshape(-1, 1))
        names.append(col)

    return np.hstack(blocks), names


def fit_recipe(train_rows: pd.DataFrame, config: RecipeConfig | None = None) -> Recipe:
    """Learn all transform parameters from training rows only.

    The provenance column is never a predictor and the outcome column is
    excluded from transforms (it is only sanity-checked for nonzero
    variance when present).
    """
    if len(train_rows) == 0:
        raise RecipeError("cannot fit a recipe on zero rows")
    config = config or RecipeConfig()
    recipe = Recipe(config=config)

    if OUTCOME_COLUMN in train_rows.columns:
        y = pd.to_numeric(train_rows[OUTCOME_COLUMN], errors="coerce").to_numpy(dtype=float)
        finite = y[np.isfinite(y)]
        if finite.size and float(np.std(finite)) == 0.0:
            recipe.warnings.append("outcome has zero standard deviation on training rows")

    n = len(train_rows)
    min_count = config.rare_level_threshold * n
    for col in CATEGORICAL_COLUMNS:
        if col not in train_rows.columns:
            recipe.vocabularies[col] = []
            continue
        counts = train_rows[col].map(_categorical_value).value_counts()
        kept = [str(level) for level, c in counts.items() if c >= min_count]
        recipe.vocabularies[col] = sorted(kept)

    for col in NUMERIC_COLUMNS:
        if col in train_rows.columns:
            values = pd.to_numeric(train_rows[col], errors="coerce").to_numpy(dtype=float)
            values = values[np.isfinite(values)]
        else:
            values = np.array([])
        # an all-missing column becomes constant and is removed below
        recipe.medians[col] = float(np.median(values)) if values.size else 0.0
        if values.size == 0:
            recipe.warnings.append(f"no finite training values for {col}; column dropped")

    matrix, names = _encode(recipe, train_rows)
    recipe.encoded_columns = names

    retained = [j for j in range(matrix.shape[1]) if not np.all(matrix[:, j] == matrix[0, j])]
    if not retained:
        raise RecipeError("all predictors removed (degenerate input)")
    recipe.retained = retained

    numeric_set = set(NUMERIC_COLUMNS)
    for j in retained:
        name = names[j]
        if name in numeric_set:
            col = matrix[:, j]
            recipe.scale_means[name] = float(np.mean(col))
            recipe.scale_stds[name] = float(np.std(col, ddof=1)) if n > 1 else 1.0

    recipe.fitted = True

    if config.pca_components is not None:
        base = _transform(recipe, train_rows, pca=False)
        k = min(config.pca_components, MAX_PCA_COMPONENTS, base.shape[0], base.shape[1])
        _, _, vt = np.linalg.svd(base, full_matrices=False)
        recipe.pca_basis = vt[:k].T
    return recipe


def _transform(recipe: Recipe, rows: pd.DataFrame, pca: bool = True) -> np.ndarray:
    matrix, names = _encode(recipe, rows)
    matrix = matrix[:, recipe.retained]
    kept_names = [names[j] for j in recipe.retained]
    for j, name in enumerate(kept_names):
        if name in recipe.scale_means:
            std = recipe.scale_stds[name]
            matrix[:, j] = (matrix[:, j] - recipe.scale_means[name]) / (std if std > 0 else 1.0)
    if pca and recipe.pca_basis is not None:
        matrix = matrix @ recipe.pca_basis
    return matrix


def apply_recipe(recipe: Recipe, rows: pd.DataFrame) -> np.ndarray:
    """Deterministically transform a batch into the fixed-width design matrix.

    Unseen categorical levels map to the "other" indicator; missing
    numerics are filled with the training medians; column set and order
    are identical for every batch.
    """
    if not recipe.fitted:
        raise RecipeError("recipe must be fitted before apply")
    missing = [
        c
        for c in CATEGORICAL_COLUMNS + NUMERIC_COLUMNS
        if c not in rows.columns and c != PROVENANCE_COLUMN
    ]
    if missing:
        raise RecipeError(f"batch is missing schema columns: {missing}")
    return _transform(recipe, rows)
