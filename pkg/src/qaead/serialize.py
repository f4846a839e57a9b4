"""Flat binary container used for model parameters and window caches.

Layout (little-endian):

    bytes 0-3   magic ``b"QAD1"``
    bytes 4-7   uint32 header length H
    bytes 8-    UTF-8 JSON header of H bytes
    then        raw array payloads, C-order, in header order

The JSON header is ``{"kind": str, "arrays": [{"name", "dtype", "shape"}],
"meta": {...}}``. Arrays are float64/uint8/int64 etc. by numpy dtype name;
`meta` carries model-kind specific fields (circuit shape, scaler bounds, ...).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import IngestionError

MAGIC = b"QAD1"


def write_container(path, kind: str, arrays: dict[str, np.ndarray],
                    meta: dict) -> None:
    entries = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        entries.append({"name": name, "dtype": arr.dtype.name,
                        "shape": list(arr.shape)})
        payloads.append(arr.tobytes())
    header = json.dumps({"kind": kind, "arrays": entries, "meta": meta},
                        sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in payloads:
            fh.write(blob)


def read_container(path) -> tuple[str, dict[str, np.ndarray], dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise IngestionError(f"{path}: not a qaead container (magic {magic!r})")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = fh.read(count * dtype.itemsize)
            if len(blob) != count * dtype.itemsize:
                raise IngestionError(f"{path}: truncated payload for {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(blob, dtype=dtype).reshape(shape).copy()
    return header["kind"], arrays, header.get("meta", {})
