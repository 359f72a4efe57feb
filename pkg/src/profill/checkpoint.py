"""Versioned checkpoint container: JSON header + raw float32 arrays.

Layout: 4-byte magic, uint32 little-endian header length, UTF-8 JSON
header, then the concatenated little-endian float32 array payload. The
header carries a manifest of {name, shape, offset, nbytes} for every
array. Writes go to a temp file in the target directory and are renamed
into place, so a failed write never corrupts an existing checkpoint.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"PFCK"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Container is missing, truncated, corrupt, or of an unsupported version."""


def write_container(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append(
            {"name": name, "shape": list(np.asarray(arr).shape), "dtype": "float32",
             "offset": offset, "nbytes": len(data)}
        )
        chunks.append(data)
        offset += len(data)
    full_header = dict(header)
    full_header["format_version"] = FORMAT_VERSION
    full_header["arrays"] = manifest
    header_bytes = json.dumps(full_header).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for chunk in chunks:
                fh.write(chunk)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint container")
    (header_len,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + header_len:
        raise CheckpointError(f"{path} is truncated (header)")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} has a corrupt header: {exc}") from exc
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version!r}")
    payload = blob[8 + header_len :]
    arrays: dict[str, np.ndarray] = {}
    for entry in header.get("arrays", []):
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise CheckpointError(f"{path} is truncated (array {entry['name']!r})")
        flat = np.frombuffer(payload[start : start + nbytes], dtype="<f4")
        expected = int(np.prod(entry["shape"])) if entry["shape"] else 1
        if flat.size != expected:
            raise CheckpointError(
                f"array {entry['name']!r} shape manifest {entry['shape']} "
                f"does not match payload size {flat.size}"
            )
        arrays[entry["name"]] = flat.reshape(entry["shape"]).copy()
    return header, arrays
