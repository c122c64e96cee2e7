"""Deterministic serialization helpers.

All numeric output is rendered with 17 significant digits so files round-trip
float64 exactly and repeated seeded runs are byte-identical.  Writes go to a
temp file in the target directory followed by an atomic rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def canonical_json(obj, _indent: int | None = None) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    if isinstance(obj, dict):
        items = ",".join(
            f"{json.dumps(str(k))}:{canonical_json(v)}"
            for k, v in sorted(obj.items())
        )
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        return "[" + ",".join(canonical_json(v) for v in seq) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if v != v or v in (float("inf"), float("-inf")):
            return json.dumps(str(v))
        return format_float(v)
    return json.dumps(obj)


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
