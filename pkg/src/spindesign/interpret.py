"""Model inspection: importance, response surfaces, surrogates, residuals.

All tools work on raw schema rows and re-run the preprocessing recipe
themselves, so a categorical variable is permuted as one unit rather
than indicator-by-indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import ndtri

from .bundle import ModelBundle
from .dataset import CATEGORICAL_COLUMNS, NUMERIC_COLUMNS, OUTCOME_COLUMN
from .evaluation import compute_metrics
from .learners import train
from .pipeline import apply_recipe

PREDICTOR_COLUMNS = CATEGORICAL_COLUMNS + NUMERIC_COLUMNS


class InterpretError(ValueError):
    pass


# ----------------------------------------------------------- importance


@dataclass(frozen=True)
class FeatureImportance:
    feature: str
    score: float  # mean RMSE increase when permuted, clamped at 0
    raw_mean: float
    std_error: float
    rank: int


@dataclass
class ImportanceReport:
    baseline_rmse: float
    repeats: int
    seed: int
    features: list[FeatureImportance]


def permutation_importance(
    bundle: ModelBundle,
    rows: pd.DataFrame,
    repeats: int = 5,
    seed: int = 0,
) -> ImportanceReport:
    """RMSE increase from shuffling each raw column, averaged over repeats.

    Negative mean increases (noise on useless features) clamp to zero so
    the scores stay comparable across models.
    """
    if repeats < 1:
        raise InterpretError("repeats must be >= 1")
    if OUTCOME_COLUMN not in rows.columns:
        raise InterpretError("rows must include the outcome column")
    if len(rows) < 2:
        raise InterpretError("need at least 2 rows")
    y = rows[OUTCOME_COLUMN].to_numpy(dtype=float)
    baseline = compute_metrics(y, bundle.predict_rows(rows)).rmse

    results = []
    for f_idx, feature in enumerate(PREDICTOR_COLUMNS):
        increases = np.empty(repeats)
        for r in range(repeats):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(f_idx, r))
            )
            shuffled = rows.copy()
            shuffled[feature] = rng.permutation(shuffled[feature].to_numpy())
            increases[r] = compute_metrics(y, bundle.predict_rows(shuffled)).rmse - baseline
        raw_mean = float(increases.mean())
        se = float(increases.std(ddof=1) / math.sqrt(repeats)) if repeats > 1 else 0.0
        results.append((feature, max(0.0, raw_mean), raw_mean, se))

    order = sorted(range(len(results)), key=lambda i: (-results[i][1], results[i][0]))
    ranked = [None] * len(results)
    for rank_pos, i in enumerate(order):
        feature, score, raw_mean, se = results[i]
        ranked[i] = FeatureImportance(
            feature=feature, score=score, raw_mean=raw_mean, std_error=se, rank=rank_pos + 1
        )
    return ImportanceReport(
        baseline_rmse=baseline, repeats=repeats, seed=seed, features=list(ranked)
    )


# -------------------------------------------------------- response grid


@dataclass
class ResponseGrid:
    var_a: str
    var_b: str
    grid_a: np.ndarray
    grid_b: np.ndarray
    matrix: np.ndarray  # matrix[i, j] = prediction at (grid_a[i], grid_b[j])
    fixed: dict


def response_grid(
    bundle: ModelBundle,
    rows: pd.DataFrame,
    var_a: str,
    var_b: str,
    resolution: int = 25,
) -> ResponseGrid:
    """Predictions over a 2-D sweep of two numeric variables.

    The swept variables cover their observed ranges; everything else sits
    at its median (numeric) or most frequent level (categorical).
    """
    numeric = set(NUMERIC_COLUMNS)
    if var_a not in numeric or var_b not in numeric or var_a == var_b:
        raise InterpretError("var_a and var_b must be distinct numeric variables")
    if resolution < 2:
        raise InterpretError("resolution must be >= 2")

    fixed: dict = {}
    for col in NUMERIC_COLUMNS:
        values = pd.to_numeric(rows[col], errors="coerce").to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        fixed[col] = float(np.median(finite)) if finite.size else 0.0
    for col in CATEGORICAL_COLUMNS:
        cleaned = rows[col].map(lambda v: "" if pd.isna(v) else str(v))
        counts = cleaned.value_counts()
        fixed[col] = str(counts.index[0]) if len(counts) else ""

    def observed_range(col):
        values = pd.to_numeric(rows[col], errors="coerce").to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        if not finite.size:
            raise InterpretError(f"{col} has no observed values to sweep")
        return float(finite.min()), float(finite.max())

    lo_a, hi_a = observed_range(var_a)
    lo_b, hi_b = observed_range(var_b)
    grid_a = np.linspace(lo_a, hi_a, resolution)
    grid_b = np.linspace(lo_b, hi_b, resolution)

    records = []
    for a in grid_a:
        for b in grid_b:
            record = dict(fixed)
            record[var_a] = float(a)
            record[var_b] = float(b)
            records.append(record)
    predictions = bundle.predict_rows(pd.DataFrame(records))
    matrix = predictions.reshape(resolution, resolution)
    swept_fixed = {k: v for k, v in fixed.items() if k not in (var_a, var_b)}
    return ResponseGrid(
        var_a=var_a, var_b=var_b, grid_a=grid_a, grid_b=grid_b, matrix=matrix, fixed=swept_fixed
    )


# ------------------------------------------------------- surrogate tree


@dataclass
class SurrogateReport:
    rules: str
    fidelity_r2: float
    fidelity_defined: bool
    max_depth: int
    leaves: int


def _render_rules(node, columns, indent=0) -> list[str]:
    pad = "  " * indent
    if node.is_leaf:
        return [f"{pad}-> {node.value:.1f} (n={node.n})"]
    name = columns[node.feature]
    if "=" in name:  # one-hot indicator reads better as a membership test
        base, level = name.split("=", 1)
        left_label = f"{base} is not {level or '(blank)'}"
        right_label = f"{base} is {level or '(blank)'}"
    else:
        left_label = f"{name} <= {node.threshold:.4g}"
        right_label = f"{name} > {node.threshold:.4g}"
    lines = [f"{pad}if {left_label}:"]
    lines += _render_rules(node.left, columns, indent + 1)
    lines.append(f"{pad}else ({right_label}):")
    lines += _render_rules(node.right, columns, indent + 1)
    return lines


def surrogate_tree(
    bundle: ModelBundle,
    rows: pd.DataFrame,
    max_depth: int = 3,
) -> SurrogateReport:
    """Small readable tree fit to the model's own predictions."""
    if max_depth < 1:
        raise InterpretError("max_depth must be >= 1")
    if len(rows) < 2:
        raise InterpretError("need at least 2 rows")
    X = apply_recipe(bundle.recipe, rows)
    yhat = bundle.learner.predict(X)
    if np.all(yhat == yhat[0]):
        return SurrogateReport(
            rules=f"-> {float(yhat[0]):.1f} (constant model output)",
            fidelity_r2=float("nan"),
            fidelity_defined=False,
            max_depth=max_depth,
            leaves=1,
        )
    surrogate = train("tree", {"max_depth": max_depth, "min_leaf": 5}, X, yhat)
    approx = surrogate.predict(X)
    fidelity = compute_metrics(yhat, approx)
    rules = "\n".join(_render_rules(surrogate.model.root, bundle.recipe.output_columns))
    return SurrogateReport(
        rules=rules,
        fidelity_r2=fidelity.r2,
        fidelity_defined=fidelity.r2_defined,
        max_depth=max_depth,
        leaves=surrogate.model.leaf_count(),
    )


# ----------------------------------------------------------- residuals


@dataclass
class ResidualDiagnostics:
    observed: np.ndarray
    predicted: np.ndarray
    residuals: np.ndarray
    qq_theoretical: np.ndarray
    qq_sample: np.ndarray  # standardized residuals, sorted
    slope: float
    variance_ratio: float
    tail_deviation_ses: float
    flags: list[str] = field(default_factory=list)


def residual_diagnostics(y: np.ndarray, predictions: np.ndarray) -> ResidualDiagnostics:
    """Observed-vs-predicted, residual trend/spread, and normal QQ checks.

    Flags: "trend" when standardized residuals drift with fitted values
    (|slope| > 0.1), "heteroscedastic" when the high-fitted half has over
    twice the variance of the low half (or vice versa), "heavy_tails"
    when an extreme QQ point sits more than 3 standard errors from the
    line. Perfect predictions flag nothing.
    """
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(predictions, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size < 3:
        raise InterpretError("need equal-length 1-D arrays with at least 3 points")
    resid = y - yhat
    n = y.size
    flags: list[str] = []

    resid_sd = float(resid.std(ddof=1))
    fitted_sd = float(yhat.std(ddof=1))
    if resid_sd > 0 and fitted_sd > 0:
        z_resid = (resid - resid.mean()) / resid_sd
        z_fit = (yhat - yhat.mean()) / fitted_sd
        slope = float((z_fit @ z_resid) / (z_fit @ z_fit))
    else:
        slope = 0.0
    if abs(slope) > 0.1:
        flags.append("trend")

    order = np.argsort(yhat, kind="stable")
    half = n // 2
    lo, hi = resid[order[:half]], resid[order[half:]]
    var_lo = float(lo.var(ddof=1)) if lo.size > 1 else 0.0
    var_hi = float(hi.var(ddof=1)) if hi.size > 1 else 0.0
    if min(var_lo, var_hi) > 0:
        ratio = max(var_lo, var_hi) / min(var_lo, var_hi)
    else:
        ratio = 1.0 if max(var_lo, var_hi) == 0 else float("inf")
    if resid_sd > 0 and ratio > 2.0:
        flags.append("heteroscedastic")

    if resid_sd > 0:
        z_sorted = np.sort((resid - resid.mean()) / resid_sd)
    else:
        z_sorted = np.zeros(n)
    probs = (np.arange(1, n + 1) - 0.5) / n
    theo = ndtri(probs)
    tail_dev = 0.0
    if resid_sd > 0:
        for idx in (0, n - 1):
            p = probs[idx]
            z = theo[idx]
            pdf = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
            se = math.sqrt(p * (1 - p) / n) / pdf
            tail_dev = max(tail_dev, abs(z_sorted[idx] - z) / se)
        if tail_dev > 3.0:
            flags.append("heavy_tails")

    return ResidualDiagnostics(
        observed=y,
        predicted=yhat,
        residuals=resid,
        qq_theoretical=theo,
        qq_sample=z_sorted,
        slope=slope,
        variance_ratio=ratio if np.isfinite(ratio) else 0.0,
        tail_deviation_ses=tail_dev,
        flags=flags,
    )
