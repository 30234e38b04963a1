"""Structured row selection: random, low-discrepancy + D-optimal, balanced.

Three ways to pick training rows from an ingested dataset:

* simple random draws without replacement,
* a Sobol low-discrepancy sweep over the numeric condition space whose
  candidates are filtered for plausibility and thinned to a D-optimal
  subset by greedy single-swap exchange, and
* a stratified variant that first splits the budget across polymers with
  a log-weighted allocation so minority polymers are not drowned out.

Synthetic candidates are matched back to nearest real rows so the result
can feed model training directly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import pandas as pd

from .dataset import (
    CONDITION_COLUMNS,
    OUTCOME_COLUMN,
    PROVENANCE_COLUMN,
    RATIO_COLUMNS,
    SOLVENT_COLUMNS,
    SpinDataset,
)
from .pipeline import Recipe, RecipeConfig, apply_recipe, fit_recipe

SAMPLING_METHODS = ("random", "sobol_doptimal", "balanced")
DEFAULT_OVERSAMPLE = 2.62
FEDEROV_RESTARTS = 5
SOBOL_BITS = 32
_SOBOL_MAX_DIM = 64


class SamplingError(ValueError):
    pass


# ----------------------------------------------------------------- sobol


def _load_directions() -> dict[int, tuple[int, int, list[int]]]:
    """Primitive polynomials and initial direction values for dims 2..64."""
    table: dict[int, tuple[int, int, list[int]]] = {}
    path = resources.files("spindesign.data").joinpath("sobol_directions.csv")
    with path.open() as fh:
        next(fh)  # header
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 4:
                continue
            dim, degree, poly = int(parts[0]), int(parts[1]), int(parts[2])
            m_values = [int(tok) for tok in parts[3].split()]
            table[dim] = (degree, poly, m_values)
    return table


_DIRECTIONS_CACHE: dict[int, tuple[int, int, list[int]]] | None = None


def _direction_table() -> dict[int, tuple[int, int, list[int]]]:
    global _DIRECTIONS_CACHE
    if _DIRECTIONS_CACHE is None:
        _DIRECTIONS_CACHE = _load_directions()
    return _DIRECTIONS_CACHE


def _direction_integers(dimension: int) -> np.ndarray:
    """V[j, k] = direction value k of coordinate j, scaled to 32 fraction bits."""
    table = _direction_table()
    V = np.zeros((dimension, SOBOL_BITS), dtype=np.uint64)
    for k in range(SOBOL_BITS):
        V[0, k] = 1 << (SOBOL_BITS - 1 - k)
    for j in range(2, dimension + 1):
        degree, poly, m = table[j]
        for k in range(min(degree, SOBOL_BITS)):
            V[j - 1, k] = np.uint64(m[k]) << np.uint64(SOBOL_BITS - 1 - k)
        for k in range(degree, SOBOL_BITS):
            v = V[j - 1, k - degree] ^ (V[j - 1, k - degree] >> np.uint64(degree))
            for i in range(1, degree):
                if (poly >> (degree - i)) & 1:
                    v ^= V[j - 1, k - i]
            V[j - 1, k] = v
    return V


class SobolStream:
    """Stateful Sobol sequence generator.

    Emits points of the classic sequence in order, starting after the
    all-zeros point (which is skipped so downstream range scaling never
    pins every coordinate to its minimum). ``offset`` shifts the start
    further along the sequence; two streams with equal (dimension,
    offset) produce identical output.
    """

    def __init__(self, dimension: int, offset: int = 0):
        if not 1 <= dimension <= _SOBOL_MAX_DIM:
            raise SamplingError(f"dimension must be in [1, {_SOBOL_MAX_DIM}], got {dimension}")
        if offset < 0:
            raise SamplingError("offset must be >= 0")
        self.dimension = dimension
        self._V = _direction_integers(dimension)
        self._next = 1 + offset  # raw sequence index; index 0 is the zero point

    @property
    def position(self) -> int:
        """Count of points emitted so far plus the configured offset."""
        return self._next - 1

    def take(self, n: int) -> np.ndarray:
        if n < 0:
            raise SamplingError("n must be >= 0")
        idx = np.arange(self._next, self._next + n, dtype=np.uint64)
        if idx.size and int(idx[-1]) >= (1 << SOBOL_BITS):
            raise SamplingError("sequence exhausted (2^32 points)")
        self._next += n
        gray = idx ^ (idx >> np.uint64(1))
        out = np.zeros((n, self.dimension), dtype=np.uint64)
        for k in range(SOBOL_BITS):
            mask = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
            if mask.any():
                out[mask] ^= self._V[:, k]
        return out.astype(np.float64) / float(1 << SOBOL_BITS)


def sobol_points(dimension: int, n: int, offset: int = 0) -> np.ndarray:
    """First ``n`` points of the sequence (zero point skipped)."""
    return SobolStream(dimension, offset=offset).take(n)


def scale_to_ranges(points: np.ndarray, ranges: list[tuple[float, float]]) -> np.ndarray:
    """Map unit-cube points onto per-column [lo, hi] boxes."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != len(ranges):
        raise SamplingError("points width must equal number of ranges")
    lo = np.array([r[0] for r in ranges], dtype=float)
    hi = np.array([r[1] for r in ranges], dtype=float)
    if np.any(hi < lo):
        raise SamplingError("each range needs hi >= lo")
    return lo + points * (hi - lo)


# ---------------------------------------------------------------- random


def sample_random(ds: SpinDataset, n: int, seed: int = 0) -> np.ndarray:
    """Uniform draw of n distinct row positions."""
    total = len(ds.frame)
    if not 1 <= n <= total:
        raise SamplingError(f"n must be in [1, {total}], got {n}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(total, size=n, replace=False))


def sample_ratios(
    k: int,
    rng: np.random.Generator,
    concentration: float | list[float] | None = None,
) -> np.ndarray:
    """Random positive solvent percentages summing to 100 (Dirichlet)."""
    if k < 1:
        raise SamplingError("k must be >= 1")
    if k == 1:
        return np.array([100.0])
    alpha = np.full(k, 1.0) if concentration is None else np.broadcast_to(
        np.asarray(concentration, dtype=float), (k,)
    ).copy()
    if np.any(alpha <= 0):
        raise SamplingError("concentration parameters must be positive")
    for _ in range(100):
        raw = rng.dirichlet(alpha)
        if np.all(raw > 0) and np.all(np.isfinite(raw)):
            out = raw * 100.0
            return out * (100.0 / out.sum())
    raise SamplingError("could not draw strictly positive ratios")


# -------------------------------------------------------------- federov


@dataclass
class DesignSelection:
    """Outcome of the greedy exchange search."""

    indices: np.ndarray
    criterion: float  # det(X'X)^(1/p) of the chosen design
    log: list[float] = field(default_factory=list)  # criterion after each exchange
    restart: int = 0
    converged: bool = True


def _criterion(logdet: float, p: int) -> float:
    return float(math.exp(logdet / p))


def federov_select(
    candidates: np.ndarray,
    n: int,
    seed: int = 0,
    max_iter: int = 100,
    restarts: int = FEDEROV_RESTARTS,
) -> DesignSelection:
    """Pick n rows maximizing det(X'X) by steepest-ascent single swaps.

    Runs a handful of seeded restarts and keeps the best local optimum;
    the per-restart criterion trace is non-decreasing by construction.
    """
    C = np.asarray(candidates, dtype=float)
    if C.ndim != 2:
        raise SamplingError("candidates must be a 2-D array")
    m, p = C.shape
    if not p >= 1:
        raise SamplingError("candidates need at least one column")
    if n > m:
        raise SamplingError(f"cannot select {n} rows from {m} candidates")
    if n < p:
        raise SamplingError(f"n={n} below column count {p}: X'X would be singular")

    if n == m:
        sign, logdet = np.linalg.slogdet(C.T @ C)
        if sign <= 0:
            raise SamplingError("full candidate set is singular")
        crit = _criterion(logdet, p)
        return DesignSelection(indices=np.arange(m), criterion=crit, log=[crit])

    best: DesignSelection | None = None
    best_logdet = -np.inf
    singular_starts = 0
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
        chosen = rng.choice(m, size=n, replace=False)
        sign, logdet = np.linalg.slogdet(C[chosen].T @ C[chosen])
        if sign <= 0 or not np.isfinite(logdet):
            singular_starts += 1
            continue
        trace = [_criterion(logdet, p)]
        converged = False
        for _ in range(max_iter):
            M = C[chosen].T @ C[chosen]
            Minv = np.linalg.inv(M)
            half = C @ Minv  # (m, p)
            d_all = np.einsum("ij,ij->i", half, C)
            outside = np.setdiff1d(np.arange(m), chosen, assume_unique=False)
            d_in = d_all[chosen]
            d_out = d_all[outside]
            cross = C[chosen] @ Minv @ C[outside].T
            delta = (
                d_out[None, :]
                - d_in[:, None]
                - (d_in[:, None] * d_out[None, :] - cross**2)
            )
            i, j = np.unravel_index(int(np.argmax(delta)), delta.shape)
            if delta[i, j] <= 1e-10:
                converged = True
                break
            chosen = chosen.copy()
            chosen[i] = outside[j]
            sign, logdet = np.linalg.slogdet(C[chosen].T @ C[chosen])
            if sign <= 0:
                raise SamplingError("exchange produced a singular design")
            trace.append(_criterion(logdet, p))
        if logdet > best_logdet:
            best_logdet = logdet
            best = DesignSelection(
                indices=np.sort(chosen),
                criterion=trace[-1],
                log=trace,
                restart=r,
                converged=converged,
            )
    if best is None:
        raise SamplingError(
            f"no non-singular starting design found in {restarts} restarts "
            f"({singular_starts} singular)"
        )
    return best


# ------------------------------------------------------------- balanced


@dataclass
class BalancedAllocation:
    """Per-polymer budgets from the log-weighted split."""

    n: int
    freqs: dict[str, int]
    allocations: dict[str, int]
    raw: dict[str, float]  # log-share each polymer held when last unconstrained
    capped: dict[str, int] = field(default_factory=dict)
    floored: tuple[str, ...] = ()
    passes: int = 1


def allocate_balanced(freqs: dict[str, int], n: int) -> BalancedAllocation:
    """Split a row budget across polymers by log(1 + frequency) weights.

    Shares are rounded by largest remainder (ties broken by higher
    frequency, then name). A polymer's budget never exceeds its
    availability; excess is re-split over the rest. When the budget
    covers every polymer, each one gets at least one row.
    """
    if n < 1:
        raise SamplingError("n must be >= 1")
    if any(f < 0 for f in freqs.values()):
        raise SamplingError("frequencies must be non-negative")
    pool = {p: int(f) for p, f in freqs.items() if f > 0}
    if not pool:
        raise SamplingError("no polymer has available rows")
    total = sum(pool.values())
    if n > total:
        raise SamplingError(f"budget {n} exceeds {total} available rows")

    min_one = n >= len(pool)
    fixed: dict[str, int] = {}
    capped: dict[str, int] = {}
    floored: list[str] = []
    raw_book: dict[str, float] = {}
    free = sorted(pool)
    remaining = n
    passes = 0
    while True:
        passes += 1
        weights = {p: math.log1p(pool[p]) for p in free}
        wsum = sum(weights.values())
        raw = {p: remaining * weights[p] / wsum for p in free}
        raw_book.update(raw)
        over = [p for p in free if raw[p] > pool[p]]
        if over:
            for p in over:
                fixed[p] = pool[p]
                capped[p] = pool[p]
                remaining -= pool[p]
            free = [p for p in free if p not in over]
            if not free:
                break
            continue
        under = [p for p in free if raw[p] < 1.0] if min_one else []
        if under:
            for p in under:
                fixed[p] = 1
                floored.append(p)
                remaining -= 1
            free = [p for p in free if p not in under]
            if not free:
                break
            continue
        break

    allocations = dict(fixed)
    if free:
        floors = {p: int(math.floor(raw_book[p])) for p in free}
        leftover = remaining - sum(floors.values())
        order = sorted(
            free, key=lambda p: (-(raw_book[p] - floors[p]), -pool[p], p)
        )
        for p in order[:leftover]:
            floors[p] += 1
        allocations.update(floors)
    for p in freqs:
        allocations.setdefault(p, 0)

    assert sum(allocations.values()) == n
    assert all(allocations[p] <= freqs[p] for p in freqs if freqs[p] > 0)
    return BalancedAllocation(
        n=n,
        freqs=dict(freqs),
        allocations=allocations,
        raw=raw_book,
        capped=capped,
        floored=tuple(floored),
        passes=passes,
    )


# --------------------------------------------- sobol + d-optimal designs


@dataclass
class SynthesizedDesign:
    """Selected synthetic settings plus their nearest real rows."""

    frame: pd.DataFrame
    selection: DesignSelection | None
    generated: int
    discarded_infeasible: int
    matched_rows: np.ndarray
    notes: list[str] = field(default_factory=list)


@dataclass
class BalancedDesign:
    frame: pd.DataFrame
    allocation: BalancedAllocation
    strata: dict[str, SynthesizedDesign]
    matched_rows: np.ndarray
    notes: list[str] = field(default_factory=list)


def _stable_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def _present_solvents(row: pd.Series) -> tuple[str, ...]:
    out = []
    for col in SOLVENT_COLUMNS:
        value = str(row[col]) if pd.notna(row[col]) else ""
        if value:
            out.append(value)
    return tuple(out)


def _candidate_frame(
    pool: pd.DataFrame,
    count: int,
    seed: int,
    label: str,
    fixed_polymer: str | None,
) -> pd.DataFrame:
    """Sobol numerics + empirically attached categoricals and ratios."""
    key = _stable_key(label)
    offset = int(
        np.random.SeedSequence(entropy=seed, spawn_key=(key, 0)).generate_state(1)[0] % 4096
    )
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key, 1)))

    numeric_ranges = []
    for col in CONDITION_COLUMNS:
        values = pool[col].to_numpy(dtype=float)
        finite = values[np.isfinite(values)]
        if finite.size:
            numeric_ranges.append((float(finite.min()), float(finite.max())))
        else:
            numeric_ranges.append((0.0, 0.0))
    unit = sobol_points(len(CONDITION_COLUMNS), count, offset=offset)
    numerics = scale_to_ranges(unit, numeric_ranges)

    if fixed_polymer is not None:
        polymers = np.array([fixed_polymer] * count, dtype=object)
    else:
        levels, counts = np.unique(pool["polymer"].astype(str), return_counts=True)
        polymers = rng.choice(levels, size=count, p=counts / counts.sum())

    coll_raw = pool["collector_type"].astype(str).where(pool["collector_type"].notna(), "")
    levels, counts = np.unique(coll_raw.to_numpy(dtype=object), return_counts=True)
    collectors = rng.choice(levels, size=count, p=counts / counts.sum())

    solvent_lists = [_present_solvents(row) for _, row in pool.iterrows()]
    count_dist = np.bincount([len(s) for s in solvent_lists], minlength=4)[1:4]
    if count_dist.sum() == 0:
        raise SamplingError("pool has no rows with solvents")
    count_p = count_dist / count_dist.sum()

    by_polymer: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    pool_polymers = pool["polymer"].astype(str).to_numpy()
    for poly in np.unique(pool_polymers):
        names: list[str] = []
        for solvents, row_poly in zip(solvent_lists, pool_polymers):
            if row_poly == poly:
                names.extend(solvents)
        levels, counts = np.unique(np.array(names, dtype=object), return_counts=True)
        by_polymer[poly] = (levels, counts / counts.sum())

    rows = []
    for i in range(count):
        poly = str(polymers[i])
        levels, probs = by_polymer[poly]
        k = int(rng.choice([1, 2, 3], p=count_p))
        k = min(k, len(levels))
        picks = rng.choice(levels, size=k, replace=False, p=probs)
        ratios = sample_ratios(k, rng)
        record: dict[str, object] = {
            "polymer": poly,
            "collector_type": str(collectors[i]),
        }
        for slot in range(3):
            record[SOLVENT_COLUMNS[slot]] = str(picks[slot]) if slot < k else ""
            record[RATIO_COLUMNS[slot]] = float(ratios[slot]) if slot < k else 0.0
        for j, col in enumerate(CONDITION_COLUMNS):
            record[col] = float(numerics[i, j])
        rows.append(record)
    return pd.DataFrame(rows)


def _match_nearest_rows(
    X_selected: np.ndarray,
    selected_polymers: np.ndarray,
    pool: pd.DataFrame,
    X_pool: np.ndarray,
    notes: list[str],
) -> np.ndarray:
    """Greedy distinct nearest real row per candidate, same polymer."""
    pool_positions = pool.index.to_numpy()
    pool_polymers = pool["polymer"].astype(str).to_numpy()
    used: set[int] = set()
    matched = np.empty(len(X_selected), dtype=int)
    reused = 0
    for i in range(len(X_selected)):
        group = np.flatnonzero(pool_polymers == selected_polymers[i])
        dists = np.sum((X_pool[group] - X_selected[i]) ** 2, axis=1)
        order = group[np.argsort(dists, kind="stable")]
        pick = None
        for g in order:
            if int(pool_positions[g]) not in used:
                pick = int(pool_positions[g])
                break
        if pick is None:  # stratum exhausted; reuse the closest
            pick = int(pool_positions[order[0]])
            reused += 1
        used.add(pick)
        matched[i] = pick
    if reused:
        notes.append(f"{reused} matches reused rows (stratum smaller than budget)")
    return matched


def _sobol_doptimal_frame(
    pool: pd.DataFrame,
    n: int,
    oversample_factor: float,
    constrain_to_observed_tuples: bool,
    seed: int,
    label: str,
    fixed_polymer: str | None,
) -> SynthesizedDesign:
    if n < 1:
        raise SamplingError("n must be >= 1")
    if oversample_factor < 1.0:
        raise SamplingError("oversample_factor must be >= 1")
    notes: list[str] = []
    count = int(math.ceil(oversample_factor * n))
    candidates = _candidate_frame(pool, count, seed, label, fixed_polymer)

    discarded = 0
    if constrain_to_observed_tuples:
        observed = {
            (str(row["polymer"]), frozenset(_present_solvents(row)))
            for _, row in pool.iterrows()
        }
        keep = [
            (str(row["polymer"]), frozenset(_present_solvents(row))) in observed
            for _, row in candidates.iterrows()
        ]
        discarded = int(len(candidates) - np.sum(keep))
        candidates = candidates.loc[keep].reset_index(drop=True)
    if len(candidates) < n:
        raise SamplingError(
            f"only {len(candidates)} feasible candidates after filtering, need {n}"
        )

    def _random_rows(note: str) -> SynthesizedDesign:
        notes.append(note)
        positions = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(_stable_key(label), 2))
        ).choice(len(pool), size=n, replace=False)
        matched = pool.index.to_numpy()[np.sort(positions)]
        frame = pool.iloc[np.sort(positions)].drop(
            columns=[PROVENANCE_COLUMN, OUTCOME_COLUMN]
        )
        return SynthesizedDesign(
            frame=frame.reset_index(drop=True),
            selection=None,
            generated=count,
            discarded_infeasible=discarded,
            matched_rows=matched,
            notes=notes,
        )

    recipe = fit_recipe(pool, RecipeConfig())
    X_cand = apply_recipe(recipe, candidates)
    p = X_cand.shape[1]
    if n < p:
        return _random_rows(f"budget {n} below design width {p}; used random rows")

    try:
        selection = federov_select(X_cand, n, seed=seed)
    except SamplingError:
        # candidate matrix itself is rank-deficient (a level the pool has
        # never left this stratum's candidates); design has no optimum
        return _random_rows("candidate design singular; used random rows")
    chosen = candidates.iloc[selection.indices].reset_index(drop=True)
    X_pool = apply_recipe(recipe, pool)
    matched = _match_nearest_rows(
        X_cand[selection.indices],
        chosen["polymer"].astype(str).to_numpy(),
        pool,
        X_pool,
        notes,
    )
    return SynthesizedDesign(
        frame=chosen,
        selection=selection,
        generated=count,
        discarded_infeasible=discarded,
        matched_rows=matched,
        notes=notes,
    )


def sobol_doptimal_sample(
    ds: SpinDataset,
    n: int,
    oversample_factor: float = DEFAULT_OVERSAMPLE,
    constrain_to_observed_tuples: bool = True,
    seed: int = 0,
) -> SynthesizedDesign:
    """Low-discrepancy candidates thinned to a D-optimal subset.

    Candidates sweep the observed numeric ranges with a Sobol stream,
    carry empirically attached categoricals, and by default only keep
    (polymer, solvent set) combinations that occur in the data.
    """
    return _sobol_doptimal_frame(
        ds.frame,
        n,
        oversample_factor,
        constrain_to_observed_tuples,
        seed,
        label="",
        fixed_polymer=None,
    )


def balanced_sobol_doptimal(
    ds: SpinDataset,
    n: int,
    oversample_factor: float = DEFAULT_OVERSAMPLE,
    constrain_to_observed_tuples: bool = True,
    seed: int = 0,
) -> BalancedDesign:
    """Per-polymer budgets via the log-weighted split, then a
    Sobol + D-optimal run inside each stratum."""
    allocation = allocate_balanced(ds.polymer_counts(), n)
    strata: dict[str, SynthesizedDesign] = {}
    notes: list[str] = []
    frames = []
    matched_parts = []
    for polymer in sorted(allocation.allocations):
        budget = allocation.allocations[polymer]
        if budget == 0:
            continue
        pool = ds.frame[ds.frame["polymer"] == polymer]
        design = _sobol_doptimal_frame(
            pool,
            budget,
            oversample_factor,
            constrain_to_observed_tuples,
            seed,
            label=polymer,
            fixed_polymer=polymer,
        )
        strata[polymer] = design
        frames.append(design.frame)
        matched_parts.append(design.matched_rows)
        notes.extend(f"{polymer}: {note}" for note in design.notes)
    frame = pd.concat(frames, ignore_index=True)
    matched = np.concatenate(matched_parts)
    return BalancedDesign(
        frame=frame,
        allocation=allocation,
        strata=strata,
        matched_rows=matched,
        notes=notes,
    )


# ------------------------------------------------------------ interface


def select_training_rows(
    ds: SpinDataset, method: str, n: int, seed: int = 0
) -> tuple[np.ndarray, object | None]:
    """Row positions for model training under the named method."""
    if method == "random":
        return sample_random(ds, n, seed), None
    if method == "sobol_doptimal":
        design = sobol_doptimal_sample(ds, n, seed=seed)
        return np.asarray(design.matched_rows), design
    if method == "balanced":
        design = balanced_sobol_doptimal(ds, n, seed=seed)
        return np.asarray(design.matched_rows), design
    raise SamplingError(f"unknown sampling method: {method!r}")


def export_plan(
    frame: pd.DataFrame,
    path: str,
    method: str,
    seed: int,
    params: dict | None = None,
) -> None:
    """Write a sample plan with its provenance in comment headers."""
    sep = "\t" if str(path).endswith(".tsv") else ","
    lines = [f"# method={method}", f"# seed={seed}"]
    for key, value in sorted((params or {}).items()):
        lines.append(f"# {key}={value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        frame.to_csv(fh, sep=sep, index=False)
