"""Binary tensor container used for body-model assets (magic ``BMF1``) and
trained regressor bundles (magic ``A2B1``).

Layout, bit-exact:

  bytes 0-3    magic (4 ASCII bytes)
  bytes 4-7    little-endian u32 header length H
  bytes 8..8+H UTF-8 JSON header
  8+H..        payload: raw little-endian row-major tensors

The header owns all metadata and a ``tensors`` list of
``{"name", "dtype", "shape", "offset", "length"}`` records; ``offset`` is
relative to the payload start. Writing is canonical (sorted JSON keys, compact
separators, tensors packed back to back in list order) so identical content
round-trips byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MagicMismatch, TensorShapeMismatch, VersionUnsupported

MODEL_MAGIC = b"BMF1"
A2B_MAGIC = b"A2B1"

_DTYPES = {
    "f32": np.dtype("<f4"),
    "f64": np.dtype("<f8"),
    "i32": np.dtype("<i4"),
}
# Asset files are restricted to f32/i32; regressor bundles may use f64.
ASSET_DTYPES = ("f32", "i32")


def dtype_name(arr: np.ndarray) -> str:
    for name, dt in _DTYPES.items():
        if arr.dtype == dt:
            return name
    raise TensorShapeMismatch(f"unsupported tensor dtype {arr.dtype}")


def write_container(path: str | Path, magic: bytes, header: dict, tensors: dict[str, np.ndarray]) -> None:
    """Serialize ``header`` plus named tensors. ``header`` must not already
    contain a ``tensors`` key; it is generated here."""
    if "tensors" in header:
        raise ValueError("header must not pre-define 'tensors'")
    records = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        blob = arr.astype(_DTYPES[dtype_name(arr)], copy=False).tobytes()
        records.append({
            "name": name,
            "dtype": dtype_name(arr),
            "shape": list(arr.shape),
            "offset": offset,
            "length": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    full = dict(header)
    full["tensors"] = records
    head = json.dumps(full, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(len(head).to_bytes(4, "little"))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def read_container(path: str | Path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse a container, returning (header, tensors). Tensors come back with
    their stored dtype; callers promote to float64 as needed."""
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != magic:
        raise MagicMismatch(f"{path}: expected magic {magic!r}, got {data[:4]!r}")
    head_len = int.from_bytes(data[4:8], "little")
    if len(data) < 8 + head_len:
        raise TensorShapeMismatch(f"{path}: header length {head_len} exceeds file size")
    try:
        header = json.loads(data[8:8 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TensorShapeMismatch(f"{path}: corrupt JSON header: {exc}") from exc
    if header.get("version") != 1:
        raise VersionUnsupported(f"{path}: unsupported container version {header.get('version')!r}")
    payload = data[8 + head_len:]
    tensors = {}
    for rec in header.get("tensors", []):
        name, dt, shape = rec["name"], rec["dtype"], tuple(rec["shape"])
        if dt not in _DTYPES:
            raise TensorShapeMismatch(f"{path}: tensor {name!r} has unknown dtype {dt!r}")
        start, length = rec["offset"], rec["length"]
        expect = int(np.prod(shape, dtype=np.int64)) * _DTYPES[dt].itemsize if shape else _DTYPES[dt].itemsize
        if length != expect:
            raise TensorShapeMismatch(
                f"{path}: tensor {name!r} length {length} does not match shape {shape}")
        if start < 0 or start + length > len(payload):
            raise TensorShapeMismatch(f"{path}: tensor {name!r} payload out of bounds")
        tensors[name] = np.frombuffer(payload[start:start + length], dtype=_DTYPES[dt]).reshape(shape)
    return header, tensors
