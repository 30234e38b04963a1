"""Model evaluation: metrics, stratified splits, CV, and benchmarking.

The benchmark holds out one stratified test set, lets each sampling
method pick training rows from the remaining pool, tunes every learner
by k-fold cross-validation on those rows, then scores the tuned fits on
the shared test set so methods compete on equal footing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .dataset import OUTCOME_COLUMN, SpinDataset
from .learners import Learner, default_grid, train
from .pipeline import Recipe, RecipeConfig, apply_recipe, fit_recipe
from .sampling import select_training_rows

MIN_TEST_FRACTION = 0.10
MAX_TEST_FRACTION = 0.40
ALLOWED_FOLD_COUNTS = (3, 5, 10)


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class MetricSet:
    """Error summary of one prediction batch.

    mape is in percent and skips exact-zero actuals (counted in
    mape_skipped); r2 is undefined when the actuals are constant.
    """

    rmse: float
    mae: float
    mape: float
    r2: float
    n: int
    mape_skipped: int = 0
    r2_defined: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise EvaluationError("metrics need at least one pair")
        assert self.rmse * (1 + 1e-9) + 1e-12 >= self.mae >= 0.0
        if self.r2_defined:
            assert self.r2 <= 1.0 + 1e-12


def compute_metrics(y: np.ndarray, predictions: np.ndarray) -> MetricSet:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(predictions, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise EvaluationError("y and predictions must be equal-length 1-D arrays")
    if y.size == 0:
        raise EvaluationError("metrics need at least one pair")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise EvaluationError("metrics inputs must be finite")

    err = y - yhat
    rmse = float(np.sqrt(np.mean(err**2)))
    mae = float(np.mean(np.abs(err)))
    nonzero = y != 0.0
    skipped = int(np.sum(~nonzero))
    if nonzero.any():
        with np.errstate(over="ignore"):
            mape = float(100.0 * np.mean(np.abs(err[nonzero] / y[nonzero])))
    else:
        mape = float("nan")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0 or np.all(y == y[0]):  # exact equality beats accumulated fp noise
        r2, defined = float("nan"), False
    else:
        r2, defined = float(1.0 - np.sum(err**2) / sst), True
    return MetricSet(
        rmse=rmse, mae=mae, mape=mape, r2=r2, n=y.size, mape_skipped=skipped, r2_defined=defined
    )


# ------------------------------------------------------------------ split


def split_rows(
    frame: pd.DataFrame,
    test_fraction: float = 0.30,
    seed: int = 0,
    stratify: bool = True,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Disjoint, exhaustive (train, test) row positions.

    Stratified by polymer; single-row strata go to train with a warning.
    Per-stratum test counts are the rounded fraction, so each stratum is
    within one row of the target share.
    """
    if not MIN_TEST_FRACTION <= test_fraction <= MAX_TEST_FRACTION:
        raise EvaluationError(
            f"test_fraction must be in [{MIN_TEST_FRACTION}, {MAX_TEST_FRACTION}]"
        )
    n = len(frame)
    if n < 2:
        raise EvaluationError("need at least 2 rows to split")
    warnings: list[str] = []
    test_parts: list[np.ndarray] = []
    if stratify:
        groups = frame.groupby("polymer", observed=True, sort=True).indices
        items = [(str(k), np.sort(v)) for k, v in sorted(groups.items())]
    else:
        items = [("", np.arange(n))]
    for label, positions in items:
        if len(positions) == 1 and stratify:
            warnings.append(f"stratum {label!r} has a single row; kept in train")
            continue
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(_label_key(label),))
        )
        shuffled = rng.permutation(positions)
        n_test = int(round(test_fraction * len(positions)))
        test_parts.append(shuffled[:n_test])
    test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=int)
    mask = np.ones(n, dtype=bool)
    mask[test_idx] = False
    train_idx = np.flatnonzero(mask)
    if len(test_idx) == 0:
        warnings.append("test set is empty at this fraction")
    return train_idx, test_idx, warnings


def _label_key(label: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:4], "big")


def make_folds(frame: pd.DataFrame, k: int, seed: int = 0, stratify: bool = True) -> np.ndarray:
    """Fold id per row; stratified round-robin keeps sizes within one."""
    n = len(frame)
    if not 2 <= k <= n:
        raise EvaluationError(f"k must be in [2, {n}], got {k}")
    fold_of_row = np.empty(n, dtype=int)
    cursor = 0
    if stratify:
        groups = frame.groupby("polymer", observed=True, sort=True).indices
        items = [np.sort(v) for _, v in sorted(groups.items())]
        labels = sorted(str(key) for key in groups)
    else:
        items, labels = [np.arange(n)], [""]
    for label, positions in zip(labels, items):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(_label_key(label), 7))
        )
        for pos in rng.permutation(positions):
            fold_of_row[pos] = cursor % k
            cursor += 1
    return fold_of_row


# ------------------------------------------------------------------- cv


@dataclass
class CvGridPoint:
    params: dict
    metrics: MetricSet
    oof_predictions: np.ndarray  # NaN where the row's fold was skipped


@dataclass
class CvResult:
    kind: str
    k: int
    seed: int
    points: list[CvGridPoint]
    best_index: int
    fold_of_row: np.ndarray
    skipped_folds: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def best(self) -> CvGridPoint:
        return self.points[self.best_index]


def cross_validate(
    train_frame: pd.DataFrame,
    kind: str,
    grid: list[dict] | None = None,
    k: int = 5,
    recipe_config: RecipeConfig | None = None,
    seed: int = 0,
    stratify: bool = True,
) -> CvResult:
    """Pooled out-of-fold metrics per grid point; best = min CV RMSE.

    The preprocessing recipe is refit inside every fold so no statistic
    leaks from held-out rows.
    """
    n = len(train_frame)
    fold_of_row = make_folds(train_frame, k, seed=seed, stratify=stratify)
    y_all = pd.to_numeric(train_frame[OUTCOME_COLUMN], errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(y_all)):
        raise EvaluationError("outcome must be finite for every CV row")

    config = recipe_config or RecipeConfig()
    if grid is None:
        probe = fit_recipe(train_frame, config)
        grid = default_grid(kind, n_features=len(probe.output_columns))
    if not grid:
        raise EvaluationError("grid must contain at least one point")

    oof = [np.full(n, np.nan) for _ in grid]
    skipped: list[int] = []
    warnings: list[str] = []
    for fold in range(k):
        test_mask = fold_of_row == fold
        train_mask = ~test_mask
        if not test_mask.any():
            continue
        y_train = y_all[train_mask]
        if float(np.std(y_train)) == 0.0 or train_mask.sum() < 2:
            skipped.append(fold)
            warnings.append(f"fold {fold} skipped: degenerate training outcome")
            continue
        recipe = fit_recipe(train_frame.loc[train_mask], config)
        X_train = apply_recipe(recipe, train_frame.loc[train_mask])
        X_test = apply_recipe(recipe, train_frame.loc[test_mask])
        for g, params in enumerate(grid):
            model = train(kind, params, X_train, y_train, seed=seed)
            oof[g][test_mask] = model.predict(X_test)

    points = []
    for g, params in enumerate(grid):
        have = np.isfinite(oof[g])
        if not have.any():
            raise EvaluationError("every fold was skipped; cannot score the grid")
        points.append(
            CvGridPoint(
                params=dict(params),
                metrics=compute_metrics(y_all[have], oof[g][have]),
                oof_predictions=oof[g],
            )
        )
    best_index = min(range(len(points)), key=lambda i: (points[i].metrics.rmse, i))
    return CvResult(
        kind=kind,
        k=k,
        seed=seed,
        points=points,
        best_index=best_index,
        fold_of_row=fold_of_row,
        skipped_folds=skipped,
        warnings=warnings,
    )


# -------------------------------------------------------------- benchmark


@dataclass
class EvalRow:
    """One tuned learner under one sampling method."""

    method: str
    learner: str
    params: dict
    cv: MetricSet
    test: MetricSet | None = None
    deltas: dict[str, float] | None = None


@dataclass
class EvalReport:
    rows: list[EvalRow]
    k: int
    test_fraction: float
    n_test: int
    seed: int
    selection_rule: str = "min test RMSE, CV fallback"
    warnings: list[str] = field(default_factory=list)


@dataclass
class FittedArtifact:
    recipe: Recipe
    learner: Learner
    cv: CvResult
    train_positions: np.ndarray


@dataclass
class BenchmarkResult:
    report: EvalReport
    artifacts: dict[tuple[str, str], FittedArtifact]
    test_positions: np.ndarray
    y_test: np.ndarray
    test_predictions: dict[tuple[str, str], np.ndarray]


def _metric_deltas(test: MetricSet, cv: MetricSet) -> dict[str, float]:
    return {
        "rmse": test.rmse - cv.rmse,
        "mae": test.mae - cv.mae,
        "mape": test.mape - cv.mape,
        "r2": (test.r2 - cv.r2) if (test.r2_defined and cv.r2_defined) else float("nan"),
    }


def run_benchmark(
    ds: SpinDataset,
    methods: list[str],
    learner_kinds: list[str],
    n_train: int | None = None,
    test_fraction: float = 0.30,
    k: int = 5,
    seed: int = 0,
    recipe_config: RecipeConfig | None = None,
    grids: dict[str, list[dict]] | None = None,
) -> BenchmarkResult:
    """Full comparison over sampling methods and learner kinds."""
    if not methods or not learner_kinds:
        raise EvaluationError("need at least one method and one learner kind")
    config = recipe_config or RecipeConfig()
    pool_idx, test_idx, warnings = split_rows(ds.frame, test_fraction, seed=seed)
    if len(test_idx) == 0:
        raise EvaluationError("test split is empty; dataset too small")
    pool = ds.subset(pool_idx)
    test_frame = ds.frame.iloc[test_idx]
    y_test = test_frame[OUTCOME_COLUMN].to_numpy(dtype=float)

    rows: list[EvalRow] = []
    artifacts: dict[tuple[str, str], FittedArtifact] = {}
    test_predictions: dict[tuple[str, str], np.ndarray] = {}
    for method in methods:
        budget = n_train if n_train is not None else len(pool.frame)
        selected, _ = select_training_rows(pool, method, budget, seed=seed)
        train_frame = pool.frame.iloc[np.asarray(selected)]
        for kind in learner_kinds:
            grid = grids.get(kind) if grids else None
            cv = cross_validate(
                train_frame, kind, grid=grid, k=k, recipe_config=config, seed=seed
            )
            recipe = fit_recipe(train_frame, config)
            X_train = apply_recipe(recipe, train_frame)
            y_train = train_frame[OUTCOME_COLUMN].to_numpy(dtype=float)
            model = train(kind, cv.best.params, X_train, y_train, seed=seed)
            yhat_test = model.predict(apply_recipe(recipe, test_frame))
            test_metrics = compute_metrics(y_test, yhat_test)
            rows.append(
                EvalRow(
                    method=method,
                    learner=kind,
                    params=cv.best.params,
                    cv=cv.best.metrics,
                    test=test_metrics,
                    deltas=_metric_deltas(test_metrics, cv.best.metrics),
                )
            )
            artifacts[(method, kind)] = FittedArtifact(
                recipe=recipe,
                learner=model,
                cv=cv,
                train_positions=pool_idx[np.asarray(selected)],
            )
            test_predictions[(method, kind)] = yhat_test
    report = EvalReport(
        rows=rows,
        k=k,
        test_fraction=test_fraction,
        n_test=len(test_idx),
        seed=seed,
        warnings=warnings,
    )
    return BenchmarkResult(
        report=report,
        artifacts=artifacts,
        test_positions=test_idx,
        y_test=y_test,
        test_predictions=test_predictions,
    )


def select_best(report: EvalReport) -> int:
    """Index of the winning row: lowest test RMSE, CV RMSE as fallback,
    ties broken by CV RMSE then learner name."""
    if not report.rows:
        raise EvaluationError("report has no rows")
    with_test = [i for i, r in enumerate(report.rows) if r.test is not None]
    if with_test:
        return min(
            with_test,
            key=lambda i: (report.rows[i].test.rmse, report.rows[i].cv.rmse, report.rows[i].learner),
        )
    return min(
        range(len(report.rows)),
        key=lambda i: (report.rows[i].cv.rmse, report.rows[i].learner),
    )


def report_to_delimited(report: EvalReport, sep: str = ",") -> str:
    """Flat table: one row per (method, learner) with test/CV/delta metrics."""
    header = ["method", "learner", "params"]
    for metric in ("rmse", "mae", "mape", "r2"):
        header += [f"test_{metric}", f"cv_{metric}", f"delta_{metric}"]
    lines = [sep.join(header)]
    for row in report.rows:
        cells = [row.method, row.learner, _format_params(row.params)]
        for metric in ("rmse", "mae", "mape", "r2"):
            test_v = getattr(row.test, metric) if row.test else float("nan")
            cv_v = getattr(row.cv, metric)
            delta = row.deltas.get(metric, float("nan")) if row.deltas else float("nan")
            cells += [f"{test_v:.4f}", f"{cv_v:.4f}", f"{delta:.4f}"]
        lines.append(sep.join(cells))
    return "\n".join(lines) + "\n"


def _format_params(params: dict) -> str:
    if not params:
        return "default"
    return ";".join(f"{key}={params[key]}" for key in sorted(params))


def _metricset_to_json(metrics: MetricSet | None) -> dict | None:
    if metrics is None:
        return None
    out = {
        "rmse": metrics.rmse,
        "mae": metrics.mae,
        "mape": metrics.mape if math.isfinite(metrics.mape) else None,
        "r2": metrics.r2 if metrics.r2_defined else None,
        "n": metrics.n,
        "mape_skipped": metrics.mape_skipped,
        "r2_defined": metrics.r2_defined,
    }
    return out


def _metricset_from_json(data: dict | None) -> MetricSet | None:
    if data is None:
        return None
    return MetricSet(
        rmse=data["rmse"],
        mae=data["mae"],
        mape=data["mape"] if data["mape"] is not None else float("nan"),
        r2=data["r2"] if data["r2"] is not None else float("nan"),
        n=data["n"],
        mape_skipped=data.get("mape_skipped", 0),
        r2_defined=data.get("r2_defined", True),
    )


def report_to_json(report: EvalReport) -> dict:
    """JSON-safe encoding used in bundle metadata and API payloads."""
    return {
        "k": report.k,
        "test_fraction": report.test_fraction,
        "n_test": report.n_test,
        "seed": report.seed,
        "selection_rule": report.selection_rule,
        "warnings": list(report.warnings),
        "rows": [
            {
                "method": row.method,
                "learner": row.learner,
                "params": row.params,
                "cv": _metricset_to_json(row.cv),
                "test": _metricset_to_json(row.test),
                "deltas": (
                    {k: (v if math.isfinite(v) else None) for k, v in row.deltas.items()}
                    if row.deltas
                    else None
                ),
            }
            for row in report.rows
        ],
    }


def report_from_json(data: dict) -> EvalReport:
    rows = [
        EvalRow(
            method=item["method"],
            learner=item["learner"],
            params=dict(item["params"]),
            cv=_metricset_from_json(item["cv"]),
            test=_metricset_from_json(item["test"]),
            deltas=(
                {k: (v if v is not None else float("nan")) for k, v in item["deltas"].items()}
                if item["deltas"]
                else None
            ),
        )
        for item in data["rows"]
    ]
    return EvalReport(
        rows=rows,
        k=data["k"],
        test_fraction=data["test_fraction"],
        n_test=data["n_test"],
        seed=data["seed"],
        selection_rule=data.get("selection_rule", ""),
        warnings=list(data.get("warnings", [])),
    )
