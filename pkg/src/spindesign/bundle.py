"""Self-describing model container for saving and reloading fits.

A bundle file holds the fitted preprocessing recipe, the fitted learner,
and free-form metadata in length-prefixed sections, preceded by a magic
string and format version and followed by a SHA-256 of everything before
it. Loading verifies the checksum, so truncated or bit-flipped files are
rejected instead of producing silently wrong predictions.
"""

from __future__ import annotations

import hashlib
import io
import json
import pickle
import struct
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .learners import Learner
from .pipeline import Recipe, apply_recipe

MAGIC = b"SPINBNDL"
FORMAT_VERSION = 1


class BundleError(ValueError):
    pass


@dataclass
class ModelBundle:
    recipe: Recipe
    learner: Learner
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def predict_rows(self, rows: pd.DataFrame) -> np.ndarray:
        """Recipe transform then model predict, as one deterministic step."""
        return self.learner.predict(apply_recipe(self.recipe, rows))


def _section(name: str, payload: bytes) -> bytes:
    tag = name.encode("ascii")
    return struct.pack(">B", len(tag)) + tag + struct.pack(">Q", len(payload)) + payload


def bundle_to_bytes(bundle: ModelBundle) -> bytes:
    body = io.BytesIO()
    body.write(MAGIC)
    body.write(struct.pack(">H", bundle.format_version))
    sections = [
        ("metadata", json.dumps(bundle.metadata, sort_keys=True).encode("utf-8")),
        ("recipe", pickle.dumps(bundle.recipe, protocol=4)),
        ("learner", pickle.dumps(bundle.learner, protocol=4)),
    ]
    body.write(struct.pack(">H", len(sections)))
    for name, payload in sections:
        body.write(_section(name, payload))
    raw = body.getvalue()
    return raw + hashlib.sha256(raw).digest()


def save_bundle(bundle: ModelBundle, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(bundle_to_bytes(bundle))


def bundle_from_bytes(raw: bytes) -> ModelBundle:
    if len(raw) < len(MAGIC) + 2 + 2 + 32:
        raise BundleError("file too short to be a model bundle")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise BundleError("checksum mismatch: file is corrupted or truncated")
    if not body.startswith(MAGIC):
        raise BundleError("not a model bundle (bad magic)")
    offset = len(MAGIC)
    (version,) = struct.unpack_from(">H", body, offset)
    offset += 2
    if version != FORMAT_VERSION:
        raise BundleError(
            f"unsupported bundle format version {version} (supported: {FORMAT_VERSION})"
        )
    (count,) = struct.unpack_from(">H", body, offset)
    offset += 2
    sections: dict[str, bytes] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from(">B", body, offset)
        offset += 1
        name = body[offset : offset + name_len].decode("ascii")
        offset += name_len
        (size,) = struct.unpack_from(">Q", body, offset)
        offset += 8
        sections[name] = body[offset : offset + size]
        offset += size
    missing = {"metadata", "recipe", "learner"} - set(sections)
    if missing:
        raise BundleError(f"bundle is missing sections: {sorted(missing)}")
    return ModelBundle(
        recipe=pickle.loads(sections["recipe"]),
        learner=pickle.loads(sections["learner"]),
        metadata=json.loads(sections["metadata"].decode("utf-8")),
        format_version=version,
    )


def load_bundle(path: str) -> ModelBundle:
    with open(path, "rb") as fh:
        return bundle_from_bytes(fh.read())
