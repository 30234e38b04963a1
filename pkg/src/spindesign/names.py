"""Canonical naming for column headers and solvent identities.

Datasets arrive from many sources with inconsistent header spellings and
solvent names. Every ingest path (main dataset, solubility table,
incompatibility list) funnels through the same two routines so that
lookups agree across sources.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources

_WS = re.compile(r"\s+")


def _data_text(filename: str) -> str:
    return resources.files("spindesign.data").joinpath(filename).read_text(encoding="utf-8")


def _squash(name: str) -> str:
    """Lowercase, trim, and collapse internal whitespace for lookup keys."""
    return _WS.sub(" ", str(name).strip().lower())


@lru_cache(maxsize=1)
def header_alias_map() -> dict[str, str]:
    """Map of squashed legacy header -> canonical column name."""
    raw = json.loads(_data_text("header_aliases.json"))
    table: dict[str, str] = {}
    for canonical, aliases in raw.items():
        table[_squash(canonical)] = canonical
        for alias in aliases:
            table[_squash(alias)] = canonical
    return table


def canonical_header(name: str, extra_aliases: dict[str, str] | None = None) -> str | None:
    """Resolve a raw column header to its canonical name, or None if unknown.

    ``extra_aliases`` is a user-supplied {raw: canonical} sidecar map; it is
    consulted first so site-local conventions win over the shipped table.
    """
    key = _squash(name)
    if extra_aliases:
        for raw, canon in extra_aliases.items():
            if _squash(raw) == key:
                return canon
    return header_alias_map().get(key)


@lru_cache(maxsize=1)
def solvent_synonym_map() -> dict[str, str]:
    """Map of squashed solvent spelling -> canonical solvent name."""
    raw = json.loads(_data_text("solvent_synonyms.json"))
    table: dict[str, str] = {}
    for canonical, synonyms in raw.items():
        table[_squash(canonical)] = canonical
        for syn in synonyms:
            table[_squash(syn)] = canonical
    return table


def canonical_solvent(name: object) -> str:
    """Canonicalize one solvent name; unknown names are cleaned, not dropped.

    Returns "" for missing/blank values so absence is representable.
    """
    if name is None:
        return ""
    text = str(name).strip()
    if not text or text.lower() in ("nan", "na", "none", "null"):
        return ""
    return solvent_synonym_map().get(_squash(text), _WS.sub(" ", text))
