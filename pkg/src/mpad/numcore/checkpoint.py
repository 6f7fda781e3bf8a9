"""Single-file parameter container.

Layout:
    bytes 0..7    magic ``MPADCKPT``
    bytes 8..11   little-endian uint32 header length L
    bytes 12..12+L  UTF-8 JSON header
    remainder     the named arrays, concatenated in header order as
                  row-major little-endian float64

The JSON header has an ``entries`` list of ``{"name", "rows", "cols"}``
describing the binary section, plus whatever metadata the caller stored
(typically the model configuration and the vocabulary).
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"MPADCKPT"


class CheckpointError(ValueError):
    """Malformed or truncated checkpoint file."""


def save_checkpoint(path, arrays: dict[str, np.ndarray], metadata: dict) -> None:
    entries = []
    blobs = []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"checkpoint entry {name!r} must be 2-D, got shape {a.shape}")
        entries.append({"name": name, "rows": a.shape[0], "cols": a.shape[1]})
        blobs.append(a.astype("<f8").tobytes(order="C"))
    header = dict(metadata)
    header["entries"] = entries
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    (header_len,) = struct.unpack("<I", raw[len(MAGIC): len(MAGIC) + 4])
    start = len(MAGIC) + 4
    if start + header_len > len(raw):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start: start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header ({e})") from e
    if "entries" not in header:
        raise CheckpointError(f"{path}: header has no entries list")
    arrays: dict[str, np.ndarray] = {}
    offset = start + header_len
    for entry in header["entries"]:
        rows, cols = int(entry["rows"]), int(entry["cols"])
        nbytes = rows * cols * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated data for entry {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(
            raw, dtype="<f8", count=rows * cols, offset=offset
        ).reshape(rows, cols).astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    metadata = {k: v for k, v in header.items() if k != "entries"}
    return arrays, metadata
