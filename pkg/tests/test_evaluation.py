"""Metrics, splits, cross-validation, and the benchmark harness.

The metric oracle below recomputes every formula with plain Python loops
so the vectorized implementation is checked against independent code.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spindesign.evaluation import (
    ALLOWED_FOLD_COUNTS,
    EvaluationError,
    compute_metrics,
    cross_validate,
    make_folds,
    report_from_json,
    report_to_delimited,
    report_to_json,
    run_benchmark,
    select_best,
    split_rows,
)


def _oracle_metrics(y, yhat):
    n = len(y)
    se = [(a - b) ** 2 for a, b in zip(y, yhat)]
    ae = [abs(a - b) for a, b in zip(y, yhat)]
    rmse = math.sqrt(sum(se) / n)
    mae = sum(ae) / n
    pct = [abs((a - b) / a) for a, b in zip(y, yhat) if a != 0.0]
    mape = 100.0 * sum(pct) / len(pct) if pct else float("nan")
    mean = sum(y) / n
    sst = sum((a - mean) ** 2 for a in y)
    r2 = 1.0 - sum(se) / sst if sst > 0 else float("nan")
    return rmse, mae, mape, r2


# --- metric formulas ---


def test_metrics_match_loop_oracle(rng):
    y = rng.uniform(10, 1000, size=500)
    yhat = y + rng.normal(0, 50, size=500)
    rmse, mae, mape, r2 = _oracle_metrics(y.tolist(), yhat.tolist())
    got = compute_metrics(y, yhat)
    assert got.rmse == pytest.approx(rmse, abs=1e-9)
    assert got.mae == pytest.approx(mae, abs=1e-9)
    assert got.mape == pytest.approx(mape, abs=1e-9)
    assert got.r2 == pytest.approx(r2, abs=1e-9)
    assert got.n == 500


def test_metrics_perfect_prediction():
    y = np.array([1.0, 2.0, 3.0])
    got = compute_metrics(y, y)
    assert got.rmse == 0.0
    assert got.mae == 0.0
    assert got.r2 == 1.0


def test_metrics_zero_actuals_skipped_in_mape():
    y = np.array([0.0, 10.0, 20.0])
    yhat = np.array([1.0, 11.0, 22.0])
    got = compute_metrics(y, yhat)
    assert got.mape_skipped == 1
    assert got.mape == pytest.approx(100.0 * (0.1 + 0.1) / 2)


def test_metrics_all_zero_actuals():
    y = np.zeros(4)
    got = compute_metrics(y, np.ones(4))
    assert got.mape_skipped == 4
    assert math.isnan(got.mape)
    assert not got.r2_defined


def test_metrics_constant_actuals_r2_undefined():
    y = np.full(5, 3.0)
    got = compute_metrics(y, y + 0.1)
    assert not got.r2_defined
    assert math.isnan(got.r2)


def test_metrics_input_validation():
    with pytest.raises(EvaluationError):
        compute_metrics(np.array([]), np.array([]))
    with pytest.raises(EvaluationError):
        compute_metrics(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(EvaluationError):
        compute_metrics(np.array([1.0, np.nan]), np.array([1.0, 2.0]))


@given(
    arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e6, 1e6)),
    arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e6, 1e6)),
)
@settings(max_examples=150, deadline=None)
def test_metrics_invariants(y, yhat):
    n = min(len(y), len(yhat))
    y, yhat = y[:n], yhat[:n]
    got = compute_metrics(y, yhat)
    assert got.rmse * (1 + 1e-9) + 1e-12 >= got.mae >= 0.0
    if got.r2_defined:
        assert got.r2 <= 1.0 + 1e-12
    if not math.isnan(got.mape):
        assert got.mape >= 0.0


# --- splits ---


def test_split_disjoint_and_exhaustive(dataset):
    train, test, _ = split_rows(dataset.frame, 0.30, seed=0)
    assert len(train) + len(test) == len(dataset)
    assert set(train.tolist()).isdisjoint(test.tolist())
    assert sorted(train.tolist() + test.tolist()) == list(range(len(dataset)))


def test_split_stratified_proportions(dataset):
    _, test, _ = split_rows(dataset.frame, 0.30, seed=1)
    frame = dataset.frame
    test_polymers = frame.iloc[test]["polymer"].value_counts()
    for polymer, total in frame["polymer"].value_counts().items():
        expected = round(0.30 * total)
        assert abs(test_polymers.get(polymer, 0) - expected) <= 0


def test_split_deterministic(dataset):
    a = split_rows(dataset.frame, 0.25, seed=9)
    b = split_rows(dataset.frame, 0.25, seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_split_fraction_bounds(dataset):
    with pytest.raises(EvaluationError):
        split_rows(dataset.frame, 0.05)
    with pytest.raises(EvaluationError):
        split_rows(dataset.frame, 0.45)
    split_rows(dataset.frame, 0.10)
    split_rows(dataset.frame, 0.40)


def test_split_single_row_stratum_goes_to_train(tiny_frame):
    frame = tiny_frame.copy()
    frame.loc[0, "polymer"] = "LONER"
    train, test, warnings = split_rows(frame, 0.30, seed=0)
    assert 0 in train.tolist()
    assert any("LONER" in w for w in warnings)


# --- folds ---


def test_make_folds_cover_all_rows(dataset):
    folds = make_folds(dataset.frame, k=5, seed=0)
    assert len(folds) == len(dataset)
    assert set(folds.tolist()) == set(range(5))
    counts = np.bincount(folds, minlength=5)
    assert counts.max() - counts.min() <= 1


def test_make_folds_stratified_spread(dataset):
    folds = make_folds(dataset.frame, k=5, seed=0)
    frame = dataset.frame
    for polymer, total in frame["polymer"].value_counts().items():
        if total < 5:
            continue
        sub = folds[(frame["polymer"] == polymer).to_numpy()]
        counts = np.bincount(sub, minlength=5)
        assert counts.max() - counts.min() <= 1


def test_make_folds_leave_one_out(tiny_frame):
    folds = make_folds(tiny_frame, k=len(tiny_frame), seed=0)
    assert sorted(folds.tolist()) == list(range(len(tiny_frame)))


def test_make_folds_k_bounds(tiny_frame):
    with pytest.raises(EvaluationError):
        make_folds(tiny_frame, k=1)
    with pytest.raises(EvaluationError):
        make_folds(tiny_frame, k=len(tiny_frame) + 1)


# --- cross-validation ---


def test_cross_validate_selects_minimum_rmse(dataset):
    result = cross_validate(dataset.frame.iloc[:120], "tree", k=3, seed=0)
    rmses = [p.metrics.rmse for p in result.points]
    assert result.best_index == int(np.argmin(rmses))
    assert result.best.metrics.rmse == min(rmses)


def test_cross_validate_oof_coverage(dataset):
    frame = dataset.frame.iloc[:90]
    result = cross_validate(frame, "linear", k=3, seed=0)
    preds = result.points[0].oof_predictions
    assert len(preds) == len(frame)
    assert np.all(np.isfinite(preds))
    assert len(result.fold_of_row) == len(frame)


def test_cross_validate_oof_metrics_recomputable(dataset):
    frame = dataset.frame.iloc[:90]
    result = cross_validate(frame, "linear", k=3, seed=0)
    point = result.points[0]
    y = frame["fiber_diameter"].to_numpy(float)
    recount = compute_metrics(y, point.oof_predictions)
    assert recount.rmse == pytest.approx(point.metrics.rmse, rel=1e-12)


def test_cross_validate_grid_order_tiebreak(dataset):
    frame = dataset.frame.iloc[:60]
    grid = [{"k": 5}, {"k": 5}]  # identical points tie exactly
    result = cross_validate(frame, "knn", grid=grid, k=3, seed=0)
    assert result.best_index == 0


def test_cross_validate_any_k_in_library(dataset):
    frame = dataset.frame.iloc[:40]
    result = cross_validate(frame, "linear", k=4, seed=0)  # not in the CLI set
    assert result.k == 4
    assert tuple(ALLOWED_FOLD_COUNTS) == (3, 5, 10)


# --- benchmark ---


@pytest.fixture(scope="module")
def benchmark(dataset):
    return run_benchmark(
        dataset,
        methods=["random", "balanced"],
        learner_kinds=["linear", "tree"],
        n_train=120,
        test_fraction=0.30,
        k=3,
        seed=0,
    )


def test_benchmark_row_coverage(benchmark):
    pairs = {(r.method, r.learner) for r in benchmark.report.rows}
    assert pairs == {
        ("random", "linear"),
        ("random", "tree"),
        ("balanced", "linear"),
        ("balanced", "tree"),
    }


def test_benchmark_deltas_exact(benchmark):
    for row in benchmark.report.rows:
        assert row.test is not None
        for metric in ("rmse", "mae", "r2"):
            expected = getattr(row.test, metric) - getattr(row.cv, metric)
            assert row.deltas[metric] == pytest.approx(expected, abs=1e-12)


def test_benchmark_shared_test_set(benchmark, dataset):
    # every method/learner pair is scored on the same held-out rows
    test_idx = benchmark.test_positions
    y = dataset.frame.iloc[test_idx]["fiber_diameter"].to_numpy(float)
    np.testing.assert_array_equal(benchmark.y_test, y)
    for key, preds in benchmark.test_predictions.items():
        assert len(preds) == len(test_idx)


def test_benchmark_test_metrics_recomputable(benchmark):
    for row in benchmark.report.rows:
        preds = benchmark.test_predictions[(row.method, row.learner)]
        recount = compute_metrics(benchmark.y_test, preds)
        assert recount.rmse == pytest.approx(row.test.rmse, rel=1e-12)


def test_benchmark_training_rows_disjoint_from_test(benchmark):
    test_set = set(benchmark.test_positions.tolist())
    for artifact in benchmark.artifacts.values():
        assert test_set.isdisjoint(artifact.train_positions.tolist())


def test_select_best_prefers_low_test_rmse(benchmark):
    best = select_best(benchmark.report)
    rows = benchmark.report.rows
    assert rows[best].test.rmse == min(r.test.rmse for r in rows)


def test_benchmark_requires_methods_and_learners(dataset):
    with pytest.raises(EvaluationError):
        run_benchmark(dataset, [], ["linear"])
    with pytest.raises(EvaluationError):
        run_benchmark(dataset, ["random"], [])


# --- report rendering and persistence ---


def test_report_delimited_format(benchmark):
    text = report_to_delimited(benchmark.report)
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    assert header[:3] == ["method", "learner", "params"]
    assert "test_rmse" in header and "cv_rmse" in header and "delta_rmse" in header
    assert len(lines) == len(benchmark.report.rows) + 1
    # every numeric cell renders with four decimals
    cell = lines[1].split(",")[3]
    assert "." in cell and len(cell.split(".")[1]) == 4


def test_report_json_roundtrip(benchmark):
    data = report_to_json(benchmark.report)
    back = report_from_json(data)
    assert len(back.rows) == len(benchmark.report.rows)
    assert back.k == benchmark.report.k
    assert back.n_test == benchmark.report.n_test
    for a, b in zip(back.rows, benchmark.report.rows):
        assert a.method == b.method
        assert a.learner == b.learner
        assert a.cv.rmse == pytest.approx(b.cv.rmse, rel=1e-12)
        assert a.test.rmse == pytest.approx(b.test.rmse, rel=1e-12)
