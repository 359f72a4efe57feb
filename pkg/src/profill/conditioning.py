"""Attribute vectors: fake-attribute sampling, spatial encoding, manifests.

An attribute vector is a 1-d integer array with entries in {0, 1}; its
length N may be zero (unconditional mode). Attribute names are carried
separately by configs and checkpoints.
"""

from __future__ import annotations

import json

import numpy as np


class ManifestError(ValueError):
    """Attribute manifest is malformed or inconsistent."""


def validate_attributes(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"attribute vector must be 1-d, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("attribute values must be exactly 0 or 1")
    return arr


def sample_fake_attributes(rng: np.random.Generator, a_real) -> np.ndarray:
    """Return the real vector or, with probability 0.5, flip one random entry.

    The flip branch always changes the vector (the chosen bit is inverted),
    so the output differs from the input in exactly 0 or 1 positions.
    """
    real = validate_attributes(a_real)
    if real.size == 0:
        raise ValueError("fake-attribute sampling requires at least one attribute")
    out = real.copy()
    if rng.uniform() >= 0.5:
        idx = int(rng.integers(0, real.size))
        out[idx] = 1 - out[idx]
    return out


def encode_attributes(a, height: int, width: int) -> np.ndarray:
    """Tile each attribute as a constant channel: (height, width, N) float64."""
    values = validate_attributes(a)
    if height < 1 or width < 1:
        raise ValueError("height and width must be >= 1")
    return np.broadcast_to(
        values.astype(np.float64), (height, width, values.size)
    ).copy()


def read_attribute_manifest(path, attribute_names=None):
    """Parse a JSON-lines manifest of {"file": ..., "attrs": {name: 0|1}}.

    Returns (records, names): records are (file, values-array) pairs with
    values ordered by `names`. When attribute_names is None the order is
    taken from the first record. Values outside {0, 1} are rejected, never
    coerced.
    """
    records = []
    names = tuple(attribute_names) if attribute_names is not None else None
    offenders = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: invalid JSON ({exc})") from exc
            if not isinstance(row, dict) or "file" not in row or "attrs" not in row:
                raise ManifestError(f"line {lineno}: expected keys 'file' and 'attrs'")
            attrs = row["attrs"]
            if names is None:
                names = tuple(sorted(attrs))
            if set(attrs) != set(names):
                offenders.append(f"line {lineno}: attribute names {sorted(attrs)} != {sorted(names)}")
                continue
            values = [attrs[n] for n in names]
            if any(v not in (0, 1) for v in values):
                offenders.append(f"line {lineno}: non-binary attribute value in {attrs}")
                continue
            records.append((row["file"], np.asarray(values, dtype=np.int64)))
    if offenders:
        raise ManifestError("manifest rejected:\n" + "\n".join(offenders))
    return records, (names or ())


def write_attribute_manifest(path, records, names) -> None:
    """Inverse of read_attribute_manifest, one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for filename, values in records:
            attrs = {n: int(v) for n, v in zip(names, validate_attributes(values))}
            fh.write(json.dumps({"file": filename, "attrs": attrs}) + "\n")
