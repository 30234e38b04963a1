"""Polymer-solvent solubility and solvent-solvent miscibility constraints.

A candidate solvent system is chemically acceptable only if every solvent
pair in it is mutually compatible and every (polymer, solvent, ratio)
triple passes the solubility rule for the active strictness policy.
Ratings are OK (soluble), COND (conditionally soluble, ratio-capped), or
NO (insoluble). Tables ship as editable delimited text.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .names import canonical_solvent, _squash

RATINGS = ("OK", "COND", "NO")

# Fallback used when no incompatibility file is supplied: classic
# immiscible pairs only, so it never vetoes a plausible mixture.
FALLBACK_INCOMPATIBLE_PAIRS: tuple[tuple[str, str], ...] = (
    ("Water", "Chloroform"),
    ("Water", "DCM"),
    ("Water", "Toluene"),
    ("Water", "Hexane"),
    ("Water", "Ethyl acetate"),
    ("Hexane", "DMSO"),
    ("Hexane", "DMF"),
    ("Hexane", "Acetonitrile"),
    ("Hexane", "Methanol"),
)


class FeasibilityFileError(ValueError):
    """Raised for malformed solubility/incompatibility files."""


@dataclass(frozen=True)
class StrictnessPolicy:
    """COND fallback cap plus the optional trace allowance for NO pairs.

    mode      -> thr_strict: strict 0%, balanced 20%, lax 30%.
    no_allow_pct: small tolerance permitting trace amounts of NO-rated
    solvents (default 0 = fully disallowed).
    """

    mode: str = "balanced"
    no_allow_pct: float = 0.0

    THRESHOLDS = {"strict": 0.0, "balanced": 20.0, "lax": 30.0}

    def __post_init__(self):
        if self.mode not in self.THRESHOLDS:
            raise ValueError(f"unknown strictness mode {self.mode!r}")
        if self.no_allow_pct < 0:
            raise ValueError("no_allow_pct must be >= 0")

    @property
    def thr_strict(self) -> float:
        return self.THRESHOLDS[self.mode]


class SolubilityTable:
    """(polymer, solvent) -> rating plus optional max allowable percent."""

    def __init__(self):
        self._entries: dict[tuple[str, str], tuple[str, float | None]] = {}
        self.duplicate_keys: list[tuple[str, str]] = []

    def add(self, polymer: str, solvent: str, rating: str, max_pct: float | None) -> None:
        rating = rating.strip().upper()
        if rating not in RATINGS:
            raise FeasibilityFileError(f"unknown rating {rating!r} for ({polymer}, {solvent})")
        if max_pct is not None and not (0 < max_pct <= 100):
            raise FeasibilityFileError(f"max_pct out of (0, 100]: {max_pct!r}")
        key = (_squash(polymer), canonical_solvent(solvent))
        if key in self._entries:
            self.duplicate_keys.append(key)  # last entry wins
        self._entries[key] = (rating, max_pct)

    def lookup(self, polymer: str, solvent: str) -> tuple[str, float | None] | None:
        return self._entries.get((_squash(polymer), canonical_solvent(solvent)))

    def rating_counts(self) -> dict[str, int]:
        counts = {r: 0 for r in RATINGS}
        for rating, _ in self._entries.values():
            counts[rating] += 1
        return counts

    def __len__(self) -> int:
        return len(self._entries)


class IncompatibilityTable:
    """Unordered solvent pairs that must not co-occur in a mixture."""

    def __init__(self, pairs: Iterable[tuple[str, str]] = (), fallback: bool = False):
        self._pairs: set[frozenset[str]] = set()
        self.fallback = fallback
        self.skipped_self_pairs = 0
        for a, b in pairs:
            ca, cb = canonical_solvent(a), canonical_solvent(b)
            if not ca or not cb:
                continue
            if ca == cb:
                self.skipped_self_pairs += 1
                continue
            self._pairs.add(frozenset((ca, cb)))

    def incompatible(self, a: str, b: str) -> bool:
        return frozenset((canonical_solvent(a), canonical_solvent(b))) in self._pairs

    def __len__(self) -> int:
        return len(self._pairs)


@dataclass
class FeasibilityTables:
    solubility: SolubilityTable
    incompatibility: IncompatibilityTable
    warnings: list[str] = field(default_factory=list)

    def rating_counts(self) -> dict[str, int]:
        return self.solubility.rating_counts()


@dataclass(frozen=True)
class PairCheck:
    feasible: bool
    rating: str
    reason: str
    unknown_pair: bool = False


def pair_feasible(
    polymer: str,
    solvent: str,
    ratio: float,
    policy: StrictnessPolicy,
    table: SolubilityTable,
) -> PairCheck:
    """Solubility feasibility of one (polymer, solvent) at mixture percent ``ratio``.

    NO: feasible iff ratio <= no_allow_pct. COND with a max_pct: feasible
    iff ratio <= max_pct. COND without: feasible iff ratio <= the policy's
    strictness cap. OK: always feasible. Unknown pairs are treated as COND
    without a cap and flagged. All comparisons are inclusive.
    """
    if not 0 <= ratio <= 100:
        raise ValueError(f"ratio out of [0, 100]: {ratio!r}")
    entry = table.lookup(polymer, solvent)
    unknown = entry is None
    rating, max_pct = entry if entry else ("COND", None)

    if rating == "NO":
        ok = ratio <= policy.no_allow_pct
        why = f"NO-rated {solvent} at {ratio:g}% vs allowance {policy.no_allow_pct:g}%"
    elif rating == "COND" and max_pct is not None:
        ok = ratio <= max_pct
        why = f"COND-rated {solvent} at {ratio:g}% vs max_pct {max_pct:g}%"
    elif rating == "COND":
        ok = ratio <= policy.thr_strict
        why = f"COND-rated {solvent} at {ratio:g}% vs {policy.mode} cap {policy.thr_strict:g}%"
        if unknown:
            why = f"unknown pair ({polymer}, {solvent}) treated as COND; " + why
    else:  # OK
        ok, why = True, f"OK-rated {solvent}"
    return PairCheck(feasible=ok, rating=rating, reason=why, unknown_pair=unknown)


@dataclass(frozen=True)
class MixtureDecision:
    accepted: bool
    reasons: tuple[str, ...] = ()
    unknown_pairs: tuple[str, ...] = ()


def mixture_feasible(
    polymer: str,
    solvents: Sequence[tuple[str, float]],
    policy: StrictnessPolicy,
    tables: FeasibilityTables,
) -> MixtureDecision:
    """Accept a candidate solvent system iff every chemical constraint holds.

    ``solvents`` is the list of (canonical name, percent) present in the
    mixture; percents must sum to 100.
    """
    total = sum(r for _, r in solvents)
    if abs(total - 100.0) > 1e-6:
        raise ValueError(f"solvent ratios must sum to 100, got {total!r}")

    reasons: list[str] = []
    unknowns: list[str] = []
    for (a, _), (b, _) in combinations(solvents, 2):
        if tables.incompatibility.incompatible(a, b):
            reasons.append(f"incompatible solvent pair ({a}, {b})")
    for name, ratio in solvents:
        check = pair_feasible(polymer, name, ratio, policy, tables.solubility)
        if check.unknown_pair:
            unknowns.append(name)
        if not check.feasible:
            reasons.append(check.reason)
    return MixtureDecision(
        accepted=not reasons, reasons=tuple(reasons), unknown_pairs=tuple(unknowns)
    )


def row_flag(
    polymer: str,
    solvents: Sequence[str] | Sequence[tuple[str, float]],
    table: SolubilityTable,
) -> str:
    """Aggregate solubility flag: NO if any solvent is NO, else COND if any
    is COND (unknown counts as COND), else OK. Accepts bare solvent names
    or (name, ratio) pairs; ratios are ignored here."""
    ratings = []
    for item in solvents:
        name = item[0] if isinstance(item, tuple) else item
        if not name:
            continue
        entry = table.lookup(polymer, name)
        ratings.append(entry[0] if entry else "COND")
    if "NO" in ratings:
        return "NO"
    if "COND" in ratings:
        return "COND"
    return "OK"


def _read_delimited(path: str | Path) -> list[dict[str, str]]:
    text = Path(path).read_text(encoding="utf-8-sig")
    sep = "\t" if text.splitlines()[0].count("\t") > text.splitlines()[0].count(",") else ","
    reader = csv.DictReader(io.StringIO(text), delimiter=sep)
    return [{(k or "").strip().lower(): (v or "").strip() for k, v in row.items()} for row in reader]


def load_feasibility(
    solubility_path: str | Path,
    incompatibility_path: str | Path | None = None,
) -> FeasibilityTables:
    """Load both tables; the incompatibility file may be absent, in which
    case the conservative built-in fallback list is used (flagged)."""
    table = SolubilityTable()
    for i, row in enumerate(_read_delimited(solubility_path), start=2):
        polymer = row.get("polymer", "")
        solvent = row.get("solvent", "")
        rating = row.get("rating") or row.get("status") or ""
        if not polymer or not solvent:
            raise FeasibilityFileError(f"solubility line {i}: polymer/solvent missing")
        if not rating:
            raise FeasibilityFileError(f"solubility line {i}: rating missing")
        raw_pct = row.get("max_pct", "")
        try:
            max_pct = float(raw_pct) if raw_pct else None
        except ValueError as exc:
            raise FeasibilityFileError(f"solubility line {i}: bad max_pct {raw_pct!r}") from exc
        try:
            table.add(polymer, solvent, rating, max_pct)
        except FeasibilityFileError as exc:
            raise FeasibilityFileError(f"solubility line {i}: {exc}") from exc

    warnings = [
        f"duplicate (polymer, solvent) key {k}; last entry wins" for k in table.duplicate_keys
    ]

    if incompatibility_path is not None and Path(incompatibility_path).exists():
        pairs = []
        for i, row in enumerate(_read_delimited(incompatibility_path), start=2):
            a, b = row.get("solvent_a", ""), row.get("solvent_b", "")
            if not a or not b:
                raise FeasibilityFileError(f"incompatibility line {i}: pair incomplete")
            pairs.append((a, b))
        incompat = IncompatibilityTable(pairs)
        if incompat.skipped_self_pairs:
            warnings.append(f"skipped {incompat.skipped_self_pairs} self-pair(s)")
    else:
        incompat = IncompatibilityTable(FALLBACK_INCOMPATIBLE_PAIRS, fallback=True)
        warnings.append("incompatibility file absent; built-in fallback list active")

    return FeasibilityTables(solubility=table, incompatibility=incompat, warnings=warnings)


def bundled_feasibility() -> FeasibilityTables:
    """The starter tables shipped with the package."""
    base = resources.files("spindesign.data")
    return load_feasibility(
        str(base.joinpath("solubility.csv")), str(base.joinpath("incompatibility.csv"))
    )
