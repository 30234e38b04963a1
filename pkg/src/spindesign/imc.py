"""Inverse search over process settings by Monte Carlo simulation.

Given a trained model and a target diameter band, draw candidate
parameter sets, veto chemically implausible ones, predict the rest, and
report how often predictions land inside the band plus the closest
distinct candidates. Two draw modes:

* experimental: resample observed rows jointly, so every candidate is a
  setting someone actually ran (always chemically plausible by fiat);
* optimization: explore numerics uniformly inside per-polymer observed
  ranges with empirically weighted categoricals and random solvent
  splits, gated by the solubility and miscibility tables.

Draw i uses its own counter-keyed random stream, so results are
reproducible and the strictness policy never disturbs draw generation,
only acceptance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .bundle import ModelBundle
from .chemistry import (
    FeasibilityTables,
    StrictnessPolicy,
    mixture_feasible,
    row_flag,
)
from .dataset import (
    CONDITION_COLUMNS,
    OUTCOME_COLUMN,
    PROVENANCE_COLUMN,
    RATIO_COLUMNS,
    SOLVENT_COLUMNS,
    SpinDataset,
)
from .sampling import sample_ratios

IMC_MODES = ("experimental", "optimization")
MIN_POLYMER_ROWS = 5
TOP_K = 20


class ImcError(ValueError):
    pass


@dataclass(frozen=True)
class ImcConfig:
    mode: str
    polymer: str
    target: float
    tolerance: float
    n_simulations: int
    policy: StrictnessPolicy = StrictnessPolicy()
    seed: int = 0
    top_k: int = TOP_K

    def __post_init__(self):
        if self.mode not in IMC_MODES:
            raise ImcError(f"mode must be one of {IMC_MODES}, got {self.mode!r}")
        if not self.target > 0:
            raise ImcError("target diameter must be positive")
        if self.tolerance < 0:
            raise ImcError("tolerance must be >= 0")
        if self.n_simulations < 1:
            raise ImcError("n_simulations must be >= 1")
        if self.top_k < 1:
            raise ImcError("top_k must be >= 1")


@dataclass(frozen=True)
class TopCandidate:
    rank: int
    prediction: float
    abs_error: float
    solubility_flag: str
    source: str
    settings: dict


@dataclass
class ImcSummary:
    mode: str
    polymer: str
    target: float
    tolerance: float
    n_simulations: int
    seed: int
    strictness: str
    no_allow_pct: float
    n_accepted: int
    n_success: int
    acceptance_rate: float | None
    success_rate: float | None  # among accepted draws
    success_rate_unconditional: float
    predicted_mean: float | None
    predicted_sd: float | None
    rmse_to_target: float | None
    mae_to_target: float | None
    fallback_full_dataset: bool
    pool_rows: int
    unknown_pair_draws: int
    notes: list[str] = field(default_factory=list)


@dataclass
class ImcRun:
    summary: ImcSummary
    draws: pd.DataFrame
    top: list[TopCandidate]


def _draw_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _pool_for(ds: SpinDataset, polymer: str) -> tuple[pd.DataFrame, bool, list[str]]:
    """Polymer subset, or the whole dataset when it is too thin to trust."""
    subset = ds.frame[ds.frame["polymer"].astype(str) == polymer]
    notes: list[str] = []
    if len(subset) >= MIN_POLYMER_ROWS:
        return subset, False, notes
    notes.append(
        f"polymer {polymer!r} has {len(subset)} rows (< {MIN_POLYMER_ROWS}); "
        "using full-dataset ranges"
    )
    return ds.frame, True, notes


def _present_solvents(row: pd.Series) -> list[tuple[str, float]]:
    out = []
    for scol, rcol in zip(SOLVENT_COLUMNS, RATIO_COLUMNS):
        name = str(row[scol]) if pd.notna(row[scol]) else ""
        if name:
            out.append((name, float(row[rcol])))
    return out


def _optimization_stats(pool: pd.DataFrame) -> dict:
    """Everything a draw needs, computed once."""
    stats: dict = {"ranges": {}, "collector": None, "solvents": None, "count_p": None}
    for col in CONDITION_COLUMNS:
        values = pool[col].to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        stats["ranges"][col] = (
            (float(finite.min()), float(finite.max())) if finite.size else (0.0, 0.0)
        )
    coll = pool["collector_type"].astype(str).where(pool["collector_type"].notna(), "")
    levels, counts = np.unique(coll.to_numpy(dtype=object), return_counts=True)
    stats["collector"] = (levels, counts / counts.sum())

    names: list[str] = []
    lengths: list[int] = []
    for _, row in pool.iterrows():
        present = [name for name, _ in _present_solvents(row)]
        if present:
            lengths.append(len(present))
            names.extend(present)
    if not names:
        raise ImcError("pool has no rows with solvents; cannot draw candidates")
    levels, counts = np.unique(np.array(names, dtype=object), return_counts=True)
    stats["solvents"] = (levels, counts / counts.sum())
    count_hist = np.bincount(lengths, minlength=4)[1:4]
    stats["count_p"] = count_hist / count_hist.sum()
    return stats


def _empty_candidate() -> dict:
    record: dict = {"polymer": "", "collector_type": ""}
    for scol, rcol in zip(SOLVENT_COLUMNS, RATIO_COLUMNS):
        record[scol] = ""
        record[rcol] = 0.0
    for col in CONDITION_COLUMNS:
        record[col] = np.nan
    return record


def run_imc(
    config: ImcConfig,
    bundle: ModelBundle,
    ds: SpinDataset,
    tables: FeasibilityTables,
) -> ImcRun:
    """Simulate, veto, predict, and summarize one inverse search."""
    pool, fallback, notes = _pool_for(ds, config.polymer)
    pool_positions = pool.index.to_numpy()
    n = config.n_simulations

    opt_stats = _optimization_stats(pool) if config.mode == "optimization" else None

    candidates: list[dict] = []
    accepted = np.zeros(n, dtype=bool)
    sources: list[str] = []
    flags: list[str] = []
    reasons: list[str] = []
    unknown_draws = 0

    for i in range(n):
        rng = _draw_rng(config.seed, i)
        if config.mode == "experimental":
            pos = int(rng.integers(len(pool)))
            row = pool.iloc[pos]
            record = {
                col: row[col]
                for col in pool.columns
                if col not in (PROVENANCE_COLUMN, OUTCOME_COLUMN)
            }
            record["polymer"] = str(row["polymer"])
            record["collector_type"] = (
                str(row["collector_type"]) if pd.notna(row["collector_type"]) else ""
            )
            for scol in SOLVENT_COLUMNS:
                record[scol] = str(row[scol]) if pd.notna(row[scol]) else ""
            accepted[i] = True
            sources.append(f"row:{int(pool_positions[pos])}")
            reasons.append("")
            flags.append(row_flag(record["polymer"], _present_solvents(row), tables.solubility))
        else:
            record = _empty_candidate()
            record["polymer"] = config.polymer
            for col in CONDITION_COLUMNS:
                lo, hi = opt_stats["ranges"][col]
                record[col] = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
            levels, probs = opt_stats["collector"]
            record["collector_type"] = str(rng.choice(levels, p=probs))
            pool_levels, pool_probs = opt_stats["solvents"]
            k = int(rng.choice([1, 2, 3], p=opt_stats["count_p"]))
            k = min(k, len(pool_levels))
            picks = rng.choice(pool_levels, size=k, replace=False, p=pool_probs)
            ratios = sample_ratios(k, rng)
            mixture = [(str(s), float(r)) for s, r in zip(picks, ratios)]
            for slot, (name, ratio) in enumerate(mixture):
                record[SOLVENT_COLUMNS[slot]] = name
                record[RATIO_COLUMNS[slot]] = ratio
            decision = mixture_feasible(config.polymer, mixture, config.policy, tables)
            accepted[i] = decision.accepted
            if decision.unknown_pairs:
                unknown_draws += 1
            sources.append("synthetic")
            reasons.append("; ".join(decision.reasons))
            flags.append(row_flag(config.polymer, mixture, tables.solubility))
        candidates.append(record)

    frame = pd.DataFrame(candidates)
    predictions = np.full(n, np.nan)
    if accepted.any():
        predictions[accepted] = bundle.predict_rows(frame.loc[accepted])
    abs_error = np.abs(predictions - config.target)
    success = accepted & np.isfinite(predictions) & (abs_error <= config.tolerance)

    n_acc = int(accepted.sum())
    n_succ = int(success.sum())
    acc_pred = predictions[accepted]
    if n_acc:
        predicted_mean = float(acc_pred.mean())
        predicted_sd = float(acc_pred.std(ddof=1)) if n_acc > 1 else 0.0
        rmse_t = float(np.sqrt(np.mean((acc_pred - config.target) ** 2)))
        mae_t = float(np.mean(np.abs(acc_pred - config.target)))
        success_rate = n_succ / n_acc
    else:
        predicted_mean = predicted_sd = rmse_t = mae_t = success_rate = None
        notes = notes + ["no draw passed the feasibility gate"]

    summary = ImcSummary(
        mode=config.mode,
        polymer=config.polymer,
        target=config.target,
        tolerance=config.tolerance,
        n_simulations=n,
        seed=config.seed,
        strictness=config.policy.mode,
        no_allow_pct=config.policy.no_allow_pct,
        n_accepted=n_acc,
        n_success=n_succ,
        acceptance_rate=(n_acc / n) if config.mode == "optimization" else None,
        success_rate=success_rate,
        success_rate_unconditional=n_succ / n,
        predicted_mean=predicted_mean,
        predicted_sd=predicted_sd,
        rmse_to_target=rmse_t,
        mae_to_target=mae_t,
        fallback_full_dataset=fallback,
        pool_rows=len(pool),
        unknown_pair_draws=unknown_draws,
        notes=notes,
    )

    draws = frame.copy()
    draws.insert(0, "draw", np.arange(n))
    draws["accepted"] = accepted
    draws["prediction"] = predictions
    draws["abs_error"] = abs_error
    draws["success"] = success
    draws["solubility_flag"] = flags
    draws["source"] = sources
    draws["rejection_reasons"] = reasons

    return ImcRun(summary=summary, draws=draws, top=top_candidates(draws, config))


def _sig3(value: float) -> float:
    if not np.isfinite(value) or value == 0.0:
        return 0.0
    return float(round(value, 2 - int(math.floor(math.log10(abs(value))))))


def _dedup_key(row: pd.Series) -> tuple:
    solvents = tuple(
        sorted(
            (str(row[scol]), _sig3(float(row[rcol])))
            for scol, rcol in zip(SOLVENT_COLUMNS, RATIO_COLUMNS)
            if str(row[scol])
        )
    )
    numerics = tuple(
        _sig3(float(row[col])) if np.isfinite(float(row[col])) else None
        for col in CONDITION_COLUMNS
    )
    return (str(row["polymer"]), str(row["collector_type"]), solvents, numerics)


def top_candidates(draws: pd.DataFrame, config: ImcConfig) -> list[TopCandidate]:
    """Closest accepted candidates, deduplicated on 3-significant-figure
    rounded settings, ranked by |prediction - target|."""
    ok = draws[draws["accepted"] & np.isfinite(draws["prediction"])]
    ok = ok.sort_values(["abs_error", "draw"], kind="stable")
    seen: set = set()
    out: list[TopCandidate] = []
    setting_cols = (
        ["polymer", "collector_type"]
        + list(SOLVENT_COLUMNS)
        + list(RATIO_COLUMNS)
        + list(CONDITION_COLUMNS)
    )
    for _, row in ok.iterrows():
        key = _dedup_key(row)
        if key in seen:
            continue
        seen.add(key)
        settings = {}
        for col in setting_cols:
            value = row[col]
            if isinstance(value, float) and not np.isfinite(value):
                value = None
            settings[col] = value if isinstance(value, str) or value is None else float(value)
        out.append(
            TopCandidate(
                rank=len(out) + 1,
                prediction=float(row["prediction"]),
                abs_error=float(row["abs_error"]),
                solubility_flag=str(row["solubility_flag"]),
                source=str(row["source"]),
                settings=settings,
            )
        )
        if len(out) >= config.top_k:
            break
    return out


def summary_to_json(summary: ImcSummary, top: list[TopCandidate] | None = None) -> bytes:
    """Canonical JSON encoding; equal runs give byte-identical output."""

    def clean(value):
        if isinstance(value, float) and not np.isfinite(value):
            return None
        return value

    payload = {key: clean(val) for key, val in vars(summary).items()}
    if top is not None:
        payload["top_candidates"] = [
            {
                "rank": c.rank,
                "prediction": c.prediction,
                "abs_error": c.abs_error,
                "solubility_flag": c.solubility_flag,
                "source": c.source,
                "settings": {k: clean(v) for k, v in c.settings.items()},
            }
            for c in top
        ]
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def summary_from_json(raw: bytes | str) -> tuple[ImcSummary, list[TopCandidate]]:
    """Inverse of :func:`summary_to_json` (tolerates a missing top list)."""
    payload = json.loads(raw)
    top_items = payload.pop("top_candidates", [])
    summary = ImcSummary(**payload)
    top = [
        TopCandidate(
            rank=item["rank"],
            prediction=item["prediction"],
            abs_error=item["abs_error"],
            solubility_flag=item["solubility_flag"],
            source=item["source"],
            settings=dict(item["settings"]),
        )
        for item in top_items
    ]
    return summary, top
