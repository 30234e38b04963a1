/** Canned API payloads shaped exactly like the server responses. */

import type { Diagnostics, EvalReport, ImcResult, TopCandidate } from "../src/api.js";
import type { ImcForm, ImcRunRecord } from "../src/state.js";

export function candidate(rank: number, prediction: number, target: number): TopCandidate {
  return {
    rank,
    prediction,
    abs_error: Math.abs(prediction - target),
    solubility_flag: rank % 3 === 0 ? "COND" : "OK",
    source: rank % 2 === 0 ? "observed" : "synthesized",
    settings: {
      polymer: "PVA",
      solvent_1: "water",
      solvent1_ratio: 80,
      solvent_2: "ethanol",
      solvent2_ratio: 20,
      doi: rank === 1 ? "10.1000/demo.1" : "",
    },
  };
}

/** Synthesis mode: draws pass through the chemistry veto, so the rate exists. */
export function optimizationResult(): ImcResult {
  const target = 400;
  return {
    mode: "optimization",
    polymer: "PVA",
    target,
    tolerance: 80,
    n_simulations: 10000,
    seed: 3,
    strictness: "balanced",
    no_allow_pct: 0,
    n_accepted: 4123,
    n_success: 1871,
    acceptance_rate: 0.4123,
    success_rate: 0.4538,
    success_rate_unconditional: 0.1871,
    predicted_mean: 412.7,
    predicted_sd: 96.4,
    rmse_to_target: 98.2,
    mae_to_target: 77.5,
    fallback_full_dataset: false,
    pool_rows: 310,
    unknown_pair_draws: 12,
    notes: [],
    top_candidates: [candidate(1, 401.2, target), candidate(2, 395.8, target), candidate(3, 410.3, target)],
  };
}

/** Replay mode: every draw is an observed row, so no acceptance rate. */
export function experimentalResult(): ImcResult {
  const base = optimizationResult();
  return {
    ...base,
    mode: "experimental",
    n_accepted: 10000,
    n_success: 2210,
    acceptance_rate: null,
    success_rate: 0.221,
    success_rate_unconditional: 0.221,
    unknown_pair_draws: 0,
    notes: ["experimental mode: all draws are observed settings"],
  };
}

export function imcForm(overrides: Partial<ImcForm> = {}): ImcForm {
  return {
    mode: "optimization",
    polymer: "PVA",
    target: 400,
    tolerance: 80,
    n_simulations: 10000,
    strictness: "balanced",
    no_allow_pct: 0,
    seed: 3,
    top_k: 20,
    ...overrides,
  };
}

/** Two runs differing only in strictness; strict must accept no more than balanced. */
export function strictnessHistory(): ImcRunRecord[] {
  const strict = optimizationResult();
  strict.strictness = "strict";
  strict.n_accepted = 2950;
  strict.acceptance_rate = 0.295;
  strict.success_rate = 0.4407;
  const balanced = optimizationResult();
  return [
    { id: 1, form: imcForm({ strictness: "strict" }), result: strict },
    { id: 2, form: imcForm(), result: balanced },
  ];
}

function metricSet(rmse: number, mae: number, r2: number, n: number) {
  return { rmse, mae, mape: (mae / 300) * 100, r2, n, mape_skipped: 0, r2_defined: true };
}

export function evalReport(): EvalReport {
  return {
    rows: [
      {
        method: "sobol_doptimal",
        learner: "linear",
        params: {},
        cv: metricSet(118.4, 88.1, 0.58, 160),
        test: metricSet(121.9, 90.3, 0.55, 60),
        deltas: { rmse: 3.5 },
      },
      {
        method: "sobol_doptimal",
        learner: "random_forest",
        params: { mtry: 6, n_trees: 100 },
        cv: metricSet(74.2, 52.6, 0.84, 160),
        test: metricSet(70.8, 50.1, 0.86, 60),
        deltas: { rmse: -3.4 },
      },
      {
        method: "sobol_doptimal",
        learner: "knn",
        params: { k: 5 },
        cv: metricSet(95.7, 70.2, 0.71, 160),
        test: metricSet(99.4, 73.8, 0.68, 60),
        deltas: { rmse: 3.7 },
      },
    ],
    k: 5,
    test_fraction: 0.3,
    n_test: 60,
    seed: 1,
    selection_rule: "lowest test RMSE",
    warnings: [],
  };
}

export function diagnostics(): Diagnostics {
  const predicted = [220, 310, 405, 498, 612];
  return {
    flags: [],
    slope: 0.012,
    variance_ratio: 1.31,
    tail_deviation_ses: 0.8,
    observed: [231, 298, 416, 480, 630],
    predicted,
    residuals: [11, -12, 11, -18, 18],
    qq_theoretical: [-1.28, -0.52, 0, 0.52, 1.28],
    qq_sample: [-1.4, -0.6, 0.1, 0.5, 1.3],
  };
}
