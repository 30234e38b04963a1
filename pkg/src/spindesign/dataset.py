"""Electrospinning dataset ingest, validation, and summaries.

The canonical table has one row per experimental observation: a polymer,
up to three solvents with mixture ratios summing to 100%, operating
conditions, ambient conditions, and the measured fiber diameter (nm).
Everything downstream (sampling, training, inverse search) reads from the
immutable :class:`SpinDataset` produced here.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .names import canonical_header, canonical_solvent

SCHEMA_VERSION = 1

PROVENANCE_COLUMN = "doi"
OUTCOME_COLUMN = "fiber_diameter"

CATEGORICAL_COLUMNS = ("polymer", "solvent_1", "solvent_2", "solvent_3", "collector_type")
SOLVENT_COLUMNS = ("solvent_1", "solvent_2", "solvent_3")
RATIO_COLUMNS = ("solvent1_ratio", "solvent2_ratio", "solvent3_ratio")
CONDITION_COLUMNS = (
    "solution_concentration",
    "needle_diameter",
    "rotation_speed",
    "voltage",
    "flow_rate",
    "distance",
    "temperature",
    "humidity",
)
NUMERIC_COLUMNS = RATIO_COLUMNS + CONDITION_COLUMNS

_MISSING_TOKENS = {"", "nan", "na", "none", "null", "-", "n/a"}

RATIO_SUM_TOL = 1e-6


class IngestError(ValueError):
    """Raised when a source file cannot be turned into a valid dataset."""


@dataclass(frozen=True)
class SpinRecord:
    """One experimental observation."""

    doi: str
    polymer: str
    solvent_1: str
    solvent_2: str
    solvent_3: str
    solvent1_ratio: float
    solvent2_ratio: float
    solvent3_ratio: float
    solution_concentration: float
    needle_diameter: float
    collector_type: str
    rotation_speed: float
    voltage: float
    flow_rate: float
    distance: float
    temperature: float
    humidity: float
    fiber_diameter: float

    def solvents(self) -> list[tuple[str, float]]:
        """Present solvents with their mixture percentages."""
        out = []
        for name, ratio in zip(
            (self.solvent_1, self.solvent_2, self.solvent_3),
            (self.solvent1_ratio, self.solvent2_ratio, self.solvent3_ratio),
        ):
            if name:
                out.append((name, ratio))
        return out


ALL_COLUMNS = tuple(SpinRecord.__dataclass_fields__)


@dataclass
class LoadReport:
    rows_in: int = 0
    rows_out: int = 0
    drops: dict[str, int] = field(default_factory=dict)
    ratio_defaulted: int = 0
    header_renames: list[tuple[str, str]] = field(default_factory=list)
    solvent_renames: list[tuple[str, str]] = field(default_factory=list)

    def drop(self, reason: str, count: int = 1) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + count

    @property
    def total_dropped(self) -> int:
        return sum(self.drops.values())


@dataclass(frozen=True)
class IngestOptions:
    """Knobs for :func:`load_dataset`."""

    delimiter: str | None = None  # None = autodetect comma vs tab
    alias_sidecar: str | Path | None = None  # JSON {raw header: canonical}
    max_parse_errors_reported: int = 10


class SpinDataset:
    """Immutable table of validated :class:`SpinRecord` rows.

    Construction validates every record invariant (ratios in [0, 100] and
    summing to 100, finite positive outcome, non-empty polymer); the
    instance is then safe to share across threads.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        report: LoadReport | None = None,
        canonicalization_log: Sequence[tuple[str, str]] = (),
    ):
        frame = frame.reset_index(drop=True)
        _validate_frame(frame)
        self._frame = frame
        self.schema_version = SCHEMA_VERSION
        self.report = report or LoadReport(rows_in=len(frame), rows_out=len(frame))
        self.canonicalization_log = list(canonicalization_log)
        self._records: tuple[SpinRecord, ...] | None = None

    def __len__(self) -> int:
        return len(self._frame)

    @property
    def frame(self) -> pd.DataFrame:
        """The backing table; treat as read-only."""
        return self._frame

    @property
    def records(self) -> tuple[SpinRecord, ...]:
        if self._records is None:
            self._records = tuple(
                SpinRecord(**{c: row[c] for c in SpinRecord.__dataclass_fields__})
                for row in self._frame.to_dict("records")
            )
        return self._records

    def polymers(self) -> list[str]:
        return sorted(self._frame["polymer"].astype(str).unique())

    def polymer_counts(self) -> dict[str, int]:
        counts = self._frame["polymer"].astype(str).value_counts()
        return {str(k): int(v) for k, v in counts.items()}

    def subset(self, indices: Iterable[int]) -> "SpinDataset":
        """New dataset with the rows at these positions, in the given order."""
        frame = self._frame.iloc[list(indices)].reset_index(drop=True)
        return SpinDataset(frame, report=self.report, canonicalization_log=self.canonicalization_log)

    def polymer_rows(self, polymer: str) -> pd.DataFrame:
        mask = self._frame["polymer"].astype(str) == polymer
        return self._frame[mask]

    def to_csv(self, path: str | Path) -> None:
        self._frame.to_csv(path, index=False)


def _validate_frame(frame: pd.DataFrame) -> None:
    missing = [c for c in SpinRecord.__dataclass_fields__ if c not in frame.columns]
    if missing:
        raise IngestError(f"dataset frame is missing columns: {missing}")
    diam = frame[OUTCOME_COLUMN].to_numpy(dtype=float)
    if not np.all(np.isfinite(diam)) or not np.all(diam > 0):
        raise IngestError("fiber_diameter must be finite and > 0 for every record")
    if (frame["polymer"].astype(str).str.strip() == "").any():
        raise IngestError("polymer must be non-empty for every record")
    ratios = frame[list(RATIO_COLUMNS)].to_numpy(dtype=float)
    if np.any(ratios < -RATIO_SUM_TOL) or np.any(ratios > 100 + RATIO_SUM_TOL):
        raise IngestError("solvent ratios must lie in [0, 100]")
    sums = ratios.sum(axis=1)
    if np.any(np.abs(sums - 100.0) > RATIO_SUM_TOL):
        bad = int(np.argmax(np.abs(sums - 100.0) > RATIO_SUM_TOL))
        raise IngestError(f"solvent ratios must sum to 100 (row {bad}: {sums[bad]!r})")


def _sniff_delimiter(text: str) -> str:
    header = text.splitlines()[0] if text else ""
    return "\t" if header.count("\t") > header.count(",") else ","


def _parse_numeric(series: pd.Series, column: str, errors: list[str]) -> pd.Series:
    values = []
    for idx, raw in series.items():
        if raw is None or (isinstance(raw, float) and math.isnan(raw)):
            values.append(math.nan)
            continue
        text = str(raw).strip()
        if text.lower() in _MISSING_TOKENS:
            values.append(math.nan)
            continue
        try:
            values.append(float(text))
        except ValueError:
            errors.append(f"row {idx}, column {column!r}: {text!r}")
            values.append(math.nan)
    return pd.Series(values, index=series.index, dtype=float)


def load_dataset(
    source: str | Path | io.TextIOBase, options: IngestOptions | None = None
) -> SpinDataset:
    """Load a delimited-text dataset into a validated :class:`SpinDataset`.

    ``source`` is a file path or an open text stream. Headers are mapped to
    the canonical schema (shipped alias table plus an optional JSON
    sidecar), solvent names canonicalized, ratios normalized to sum to 100
    over present solvents, and rows with a missing or non-finite outcome
    dropped and counted in the attached load report.
    """
    options = options or IngestOptions()
    if hasattr(source, "read"):
        text = source.read()
    else:
        path = Path(source)
        if not path.exists():
            raise IngestError(f"no such file: {path}")
        text = path.read_text(encoding="utf-8-sig")
    sep = options.delimiter or _sniff_delimiter(text)

    sidecar: dict[str, str] = {}
    if options.alias_sidecar:
        sidecar = json.loads(Path(options.alias_sidecar).read_text(encoding="utf-8"))

    raw = pd.read_csv(io.StringIO(text), sep=sep, dtype=str, keep_default_na=False)
    report = LoadReport(rows_in=len(raw))
    log: list[tuple[str, str]] = []

    columns: dict[str, str] = {}
    for col in raw.columns:
        canon = canonical_header(col, sidecar)
        if canon is None:
            continue  # unknown columns are ignored, not fatal
        if canon in columns.values():
            raise IngestError(f"duplicate column for canonical field {canon!r}")
        columns[col] = canon
        if col != canon:
            report.header_renames.append((col, canon))
            log.append((col, canon))
    raw = raw.rename(columns=columns)[list(columns.values())]

    if OUTCOME_COLUMN not in raw.columns:
        raise IngestError(f"missing outcome column {OUTCOME_COLUMN!r}")
    if "polymer" not in raw.columns:
        raise IngestError("missing polymer column")
    for col in SpinRecord.__dataclass_fields__:
        if col not in raw.columns:
            raw[col] = ""

    parse_errors: list[str] = []
    for col in NUMERIC_COLUMNS + (OUTCOME_COLUMN,):
        raw[col] = _parse_numeric(raw[col], col, parse_errors)
    if parse_errors:
        shown = parse_errors[: options.max_parse_errors_reported]
        suffix = "" if len(parse_errors) <= len(shown) else f" (+{len(parse_errors) - len(shown)} more)"
        raise IngestError("unparseable numeric cells: " + "; ".join(shown) + suffix)

    raw[PROVENANCE_COLUMN] = raw[PROVENANCE_COLUMN].astype(str).str.strip()
    raw["collector_type"] = raw["collector_type"].astype(str).str.strip()
    raw["polymer"] = raw["polymer"].astype(str).str.strip()

    seen_renames: set[tuple[str, str]] = set()
    for col in SOLVENT_COLUMNS:
        cleaned = []
        for value in raw[col]:
            canon = canonical_solvent(value)
            raw_name = str(value).strip()
            if canon and raw_name and canon != raw_name and (raw_name, canon) not in seen_renames:
                seen_renames.add((raw_name, canon))
                report.solvent_renames.append((raw_name, canon))
                log.append((raw_name, canon))
            cleaned.append(canon)
        raw[col] = cleaned

    keep_rows: list[int] = []
    for idx in range(len(raw)):
        diam = raw.at[idx, OUTCOME_COLUMN]
        if not (isinstance(diam, (int, float)) and math.isfinite(diam) and diam > 0):
            report.drop("nonfinite_outcome")
            continue
        if not raw.at[idx, "polymer"]:
            report.drop("missing_polymer")
            continue
        present = [j for j, col in enumerate(SOLVENT_COLUMNS) if raw.at[idx, col]]
        if not present:
            report.drop("no_solvent")
            continue
        ratios = np.array([raw.at[idx, rc] for rc in RATIO_COLUMNS], dtype=float)
        ratios[np.isnan(ratios)] = 0.0
        for j in range(3):
            if j not in present:
                ratios[j] = 0.0
        total = ratios[present].sum()
        if total <= 0:
            ratios[present] = 100.0 / len(present)
            report.ratio_defaulted += 1
        else:
            ratios[present] = ratios[present] * (100.0 / total)
        if np.any(ratios < 0) or np.any(ratios > 100 + RATIO_SUM_TOL):
            report.drop("invalid_ratio")
            continue
        for rc, value in zip(RATIO_COLUMNS, ratios):
            raw.at[idx, rc] = float(value)
        keep_rows.append(idx)

    frame = raw.loc[keep_rows].reset_index(drop=True)
    report.rows_out = len(frame)
    if report.rows_out == 0:
        raise IngestError("zero usable rows after validation drops")

    for col in CATEGORICAL_COLUMNS:
        frame[col] = frame[col].astype("category")
    return SpinDataset(frame, report=report, canonicalization_log=log)


# ---------------------------------------------------------------------------
# Descriptive statistics
# ---------------------------------------------------------------------------

TOTAL_LABEL = "TOTAL"


@dataclass(frozen=True)
class PolymerSummary:
    """Descriptive statistics of fiber diameter for one polymer (or TOTAL).

    Skewness and excess kurtosis are standardized central moments
    (m3 / m2^1.5 and m4 / m2^2 - 3); they are NaN with ``shape_defined``
    False when the group has zero variance. Quantiles use linear
    interpolation between order statistics (the "type 7" convention).
    """

    polymer: str
    n: int
    mean: float
    std_dev: float
    q1: float
    median: float
    q3: float
    skewness: float
    excess_kurtosis: float
    shape_defined: bool = True

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def _summarize(label: str, values: np.ndarray) -> PolymerSummary:
    n = len(values)
    if n == 0:
        raise ValueError("cannot summarize an empty group")
    mean = float(np.mean(values))
    std = 0.0 if n < 2 else float(np.std(values, ddof=1))
    q1, med, q3 = (float(q) for q in np.quantile(values, [0.25, 0.5, 0.75]))
    m2 = float(np.mean((values - mean) ** 2))
    if m2 > 0:
        m3 = float(np.mean((values - mean) ** 3))
        m4 = float(np.mean((values - mean) ** 4))
        skew, kurt, defined = m3 / m2**1.5, m4 / m2**2 - 3.0, True
    else:
        skew, kurt, defined = math.nan, math.nan, False
    return PolymerSummary(label, n, mean, std, q1, med, q3, skew, kurt, defined)


def describe(ds: SpinDataset, group_by_polymer: bool = True) -> list[PolymerSummary]:
    """Per-polymer summaries plus a TOTAL row (TOTAL only when not grouping)."""
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    diam = ds.frame[OUTCOME_COLUMN].to_numpy(dtype=float)
    out: list[PolymerSummary] = []
    if group_by_polymer:
        for polymer in ds.polymers():
            mask = (ds.frame["polymer"].astype(str) == polymer).to_numpy()
            out.append(_summarize(polymer, diam[mask]))
    out.append(_summarize(TOTAL_LABEL, diam))
    return out


def summaries_to_delimited(summaries: Sequence[PolymerSummary], sep: str = ",") -> str:
    """Render summaries as delimited text in the published column order."""
    header = sep.join(
        ["polymer", "mean", "std_dev", "q1", "median", "q3", "kurtosis", "skewness"]
    )
    lines = [header]
    for s in summaries:
        lines.append(
            sep.join(
                [s.polymer]
                + [
                    f"{v:.3f}" if not math.isnan(v) else ""
                    for v in (s.mean, s.std_dev, s.q1, s.median, s.q3, s.excess_kurtosis, s.skewness)
                ]
            )
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Empirical ranges for candidate generation
# ---------------------------------------------------------------------------


@dataclass
class EmpiricalRanges:
    """Observed per-variable extents and categorical frequencies.

    ``fallback`` is True when the requested polymer had no rows and the
    full dataset was used instead.
    """

    polymer: str
    fallback: bool
    numeric: dict[str, tuple[float, float]]
    categorical: dict[str, dict[str, float]]


def _frequencies(series: pd.Series) -> dict[str, float]:
    values = series.astype(str)
    values = values[values.str.strip() != ""]
    counts = values.value_counts()
    total = int(counts.sum())
    if total == 0:
        return {}
    return {str(level): float(c) / total for level, c in counts.items()}


def empirical_ranges(ds: SpinDataset, polymer: str) -> EmpiricalRanges:
    """Numeric (min, max) and categorical level frequencies for one polymer.

    Falls back to the full dataset (flagged) when the polymer is absent;
    numeric variables with no finite observation in the subset also fall
    back per-variable to the full dataset.
    """
    rows = ds.polymer_rows(polymer)
    fallback = rows.empty
    if fallback:
        rows = ds.frame

    numeric: dict[str, tuple[float, float]] = {}
    for col in NUMERIC_COLUMNS:
        values = rows[col].to_numpy(dtype=float)
        values = values[np.isfinite(values)]
        if values.size == 0:
            values = ds.frame[col].to_numpy(dtype=float)
            values = values[np.isfinite(values)]
        if values.size:
            numeric[col] = (float(values.min()), float(values.max()))

    categorical = {col: _frequencies(rows[col]) for col in CATEGORICAL_COLUMNS}
    return EmpiricalRanges(polymer=polymer, fallback=fallback, numeric=numeric, categorical=categorical)
