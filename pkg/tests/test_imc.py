"""Inverse search by simulation: draw accounting, feasibility gating,
candidate ranking, and summary persistence."""

from __future__ import annotations

import json

import numpy as np
import pytest

from spindesign.chemistry import StrictnessPolicy, row_flag
from spindesign.imc import (
    ImcConfig,
    ImcError,
    run_imc,
    summary_from_json,
    summary_to_json,
    top_candidates,
)


@pytest.fixture(scope="module")
def pvdf_run(knn_bundle, dataset, tables):
    config = ImcConfig(
        mode="optimization",
        polymer="PVDF",
        target=400.0,
        tolerance=150.0,
        n_simulations=800,
        policy=StrictnessPolicy("balanced"),
        seed=11,
    )
    return config, run_imc(config, knn_bundle, dataset, tables)


@pytest.fixture(scope="module")
def experimental_run(knn_bundle, dataset, tables):
    config = ImcConfig(
        mode="experimental",
        polymer="PAN",
        target=250.0,
        tolerance=80.0,
        n_simulations=600,
        seed=4,
    )
    return config, run_imc(config, knn_bundle, dataset, tables)


# --- config validation ---


def test_config_validation():
    with pytest.raises(ImcError, match="mode"):
        ImcConfig("weird", "PAN", 100.0, 10.0, 50)
    with pytest.raises(ImcError, match="target"):
        ImcConfig("experimental", "PAN", -3.0, 10.0, 50)
    with pytest.raises(ImcError, match="tolerance"):
        ImcConfig("experimental", "PAN", 100.0, -1.0, 50)
    with pytest.raises(ImcError, match="n_simulations"):
        ImcConfig("experimental", "PAN", 100.0, 10.0, 0)


# --- experimental mode ---


def test_experimental_all_draws_accepted(experimental_run):
    _, run = experimental_run
    assert run.summary.acceptance_rate is None
    assert run.summary.n_accepted == run.summary.n_simulations
    assert run.draws["accepted"].all()
    assert (run.draws["source"].str.startswith("row:")).all()


def test_experimental_draws_come_from_polymer_pool(experimental_run, dataset):
    _, run = experimental_run
    assert set(run.draws["polymer"]) == {"PAN"}
    pan_rows = set(dataset.frame.index[dataset.frame["polymer"] == "PAN"].tolist())
    sampled = {int(s.split(":")[1]) for s in run.draws["source"]}
    assert sampled <= pan_rows


def test_experimental_success_band_inclusive(experimental_run):
    config, run = experimental_run
    err = run.draws["abs_error"].to_numpy()
    success = run.draws["success"].to_numpy()
    np.testing.assert_array_equal(success, err <= config.tolerance)


def test_experimental_memorizer_recovers_observed_rows(experimental_run, dataset):
    """k=1 neighbour prediction on a resampled real row is that row's outcome."""
    _, run = experimental_run
    for _, draw in run.draws.head(25).iterrows():
        source_row = int(draw["source"].split(":")[1])
        observed = dataset.frame.loc[source_row, "fiber_diameter"]
        assert draw["prediction"] == pytest.approx(observed, rel=1e-9)


# --- optimization mode ---


def test_optimization_counts_recount(pvdf_run):
    config, run = pvdf_run
    draws = run.draws
    n_acc = int(draws["accepted"].sum())
    n_succ = int((draws["accepted"] & draws["success"]).sum())
    assert run.summary.n_accepted == n_acc
    assert run.summary.n_success == n_succ
    assert run.summary.acceptance_rate == pytest.approx(n_acc / config.n_simulations)
    assert run.summary.success_rate == pytest.approx(n_succ / n_acc)
    assert run.summary.success_rate_unconditional == pytest.approx(
        n_succ / config.n_simulations
    )


def test_optimization_stats_recount(pvdf_run):
    config, run = pvdf_run
    preds = run.draws.loc[run.draws["accepted"], "prediction"].to_numpy()
    assert run.summary.predicted_mean == pytest.approx(preds.mean(), rel=1e-12)
    assert run.summary.predicted_sd == pytest.approx(preds.std(ddof=1), rel=1e-12)
    assert run.summary.rmse_to_target == pytest.approx(
        float(np.sqrt(np.mean((preds - config.target) ** 2))), rel=1e-12
    )
    assert run.summary.mae_to_target == pytest.approx(
        float(np.mean(np.abs(preds - config.target))), rel=1e-12
    )


def test_optimization_predictions_only_for_accepted(pvdf_run):
    _, run = pvdf_run
    accepted = run.draws["accepted"].to_numpy()
    preds = run.draws["prediction"].to_numpy()
    assert np.all(np.isfinite(preds[accepted]))
    assert np.all(np.isnan(preds[~accepted]))


def test_optimization_rejections_have_reasons(pvdf_run):
    _, run = pvdf_run
    rejected = run.draws[~run.draws["accepted"]]
    assert len(rejected) > 0
    assert (rejected["rejection_reasons"].str.len() > 0).all()


def test_optimization_settings_within_observed_ranges(pvdf_run, dataset):
    _, run = pvdf_run
    pool = dataset.frame[dataset.frame["polymer"] == "PVDF"]
    for col in ("voltage", "flow_rate", "distance", "solution_concentration"):
        observed = pool[col].dropna()
        values = run.draws[col].to_numpy(float)
        assert values.min() >= observed.min() - 1e-9
        assert values.max() <= observed.max() + 1e-9


def test_optimization_ratios_sum_to_100(pvdf_run):
    _, run = pvdf_run
    totals = (
        run.draws[["solvent1_ratio", "solvent2_ratio", "solvent3_ratio"]].sum(axis=1).to_numpy()
    )
    np.testing.assert_allclose(totals, 100.0, atol=1e-6)


def test_solubility_flags_match_chemistry(pvdf_run, tables):
    _, run = pvdf_run
    for _, draw in run.draws.head(40).iterrows():
        mix = [
            (draw[f"solvent_{j}"], draw[f"solvent{j}_ratio"])
            for j in (1, 2, 3)
            if draw[f"solvent_{j}"]
        ]
        assert draw["solubility_flag"] == row_flag("PVDF", mix, tables.solubility)


def test_strictness_monotone_acceptance(knn_bundle, dataset, tables):
    rates = {}
    for mode in ("strict", "balanced", "lax"):
        config = ImcConfig(
            mode="optimization",
            polymer="PVDF",
            target=400.0,
            tolerance=100.0,
            n_simulations=400,
            policy=StrictnessPolicy(mode),
            seed=21,
        )
        rates[mode] = run_imc(config, knn_bundle, dataset, tables).summary.acceptance_rate
    assert rates["strict"] <= rates["balanced"] <= rates["lax"]


def test_same_seed_same_draw_table(knn_bundle, dataset, tables):
    config = ImcConfig("optimization", "PVDF", 350.0, 90.0, 200, seed=33)
    a = run_imc(config, knn_bundle, dataset, tables)
    b = run_imc(config, knn_bundle, dataset, tables)
    assert a.draws.equals(b.draws)


def test_wider_tolerance_never_reduces_success(knn_bundle, dataset, tables):
    base = ImcConfig("optimization", "PVDF", 400.0, 50.0, 300, seed=5)
    wide = ImcConfig("optimization", "PVDF", 400.0, 200.0, 300, seed=5)
    narrow_run = run_imc(base, knn_bundle, dataset, tables)
    wide_run = run_imc(wide, knn_bundle, dataset, tables)
    assert wide_run.summary.n_success >= narrow_run.summary.n_success
    assert wide_run.summary.n_accepted == narrow_run.summary.n_accepted


def test_small_pool_falls_back_to_full_dataset(knn_bundle, dataset, tables):
    # keep four rows of one polymer so the per-polymer pool is too thin
    frame = dataset.frame
    keep = frame.index[frame["polymer"] != "PVDF"].tolist()
    keep += frame.index[frame["polymer"] == "PVDF"].tolist()[:4]
    small = dataset.subset(sorted(keep))
    config = ImcConfig("experimental", "PVDF", 400.0, 100.0, 50, seed=0)
    run = run_imc(config, knn_bundle, small, tables)
    assert run.summary.fallback_full_dataset
    assert run.summary.pool_rows == len(small)
    assert set(run.draws["polymer"]) > {"PVDF"} or len(set(run.draws["polymer"])) >= 1


# --- top candidates ---


def test_top_candidates_sorted_and_unique(pvdf_run):
    config, run = pvdf_run
    assert len(run.top) <= config.top_k
    errors = [c.abs_error for c in run.top]
    assert errors == sorted(errors)
    assert [c.rank for c in run.top] == list(range(1, len(run.top) + 1))
    def sig3(value):
        if value is None or value == 0.0:
            return 0.0
        from math import floor, log10

        return round(value, -int(floor(log10(abs(value)))) + 2)

    condition_cols = (
        "solution_concentration", "needle_diameter", "rotation_speed", "voltage",
        "flow_rate", "distance", "temperature", "humidity",
    )
    keys = set()
    for c in run.top:
        solvents = tuple(
            sorted(
                (c.settings[f"solvent_{j}"], sig3(c.settings[f"solvent{j}_ratio"]))
                for j in (1, 2, 3)
                if c.settings[f"solvent_{j}"]
            )
        )
        numerics = tuple(sig3(c.settings[col]) for col in condition_cols)
        keys.add((c.settings["polymer"], c.settings["collector_type"], solvents, numerics))
    assert len(keys) == len(run.top)


def test_top_candidates_only_accepted(pvdf_run):
    _, run = pvdf_run
    accepted_preds = set(
        np.round(run.draws.loc[run.draws["accepted"], "prediction"].to_numpy(), 9).tolist()
    )
    for candidate in run.top:
        assert round(candidate.prediction, 9) in accepted_preds


def test_top_candidates_respect_k(pvdf_run, knn_bundle, dataset, tables):
    config, _ = pvdf_run
    small = ImcConfig(
        mode=config.mode,
        polymer=config.polymer,
        target=config.target,
        tolerance=config.tolerance,
        n_simulations=200,
        policy=config.policy,
        seed=config.seed,
        top_k=5,
    )
    run = run_imc(small, knn_bundle, dataset, tables)
    assert len(run.top) <= 5


# --- summary persistence ---


def test_summary_json_roundtrip(pvdf_run):
    _, run = pvdf_run
    raw = summary_to_json(run.summary, run.top)
    summary, top = summary_from_json(raw)
    assert summary.n_accepted == run.summary.n_accepted
    assert summary.acceptance_rate == pytest.approx(run.summary.acceptance_rate)
    assert len(top) == len(run.top)
    assert top[0].prediction == pytest.approx(run.top[0].prediction)
    assert top[0].settings == run.top[0].settings


def test_summary_json_canonical_bytes(knn_bundle, dataset, tables):
    config = ImcConfig("optimization", "PVDF", 420.0, 80.0, 150, seed=8)
    a = run_imc(config, knn_bundle, dataset, tables)
    b = run_imc(config, knn_bundle, dataset, tables)
    assert summary_to_json(a.summary, a.top) == summary_to_json(b.summary, b.top)


def test_summary_json_is_plain_json(pvdf_run):
    _, run = pvdf_run
    payload = json.loads(summary_to_json(run.summary, run.top))
    assert payload["mode"] == "optimization"
    assert payload["polymer"] == "PVDF"
    assert isinstance(payload["top_candidates"], list)


def test_experimental_summary_has_no_acceptance_rate(experimental_run):
    _, run = experimental_run
    payload = json.loads(summary_to_json(run.summary))
    assert payload["acceptance_rate"] is None


def test_seed_variation_changes_draws(knn_bundle, dataset, tables):
    base = ImcConfig("optimization", "PVDF", 400.0, 90.0, 150, seed=1)
    other = ImcConfig("optimization", "PVDF", 400.0, 90.0, 150, seed=2)
    a = run_imc(base, knn_bundle, dataset, tables)
    b = run_imc(other, knn_bundle, dataset, tables)
    assert not a.draws["voltage"].equals(b.draws["voltage"])
