"""Deterministic JSON serialization: sorted keys, 17-significant-digit floats."""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import InputError


def _fmt(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            raise InputError("cannot serialize non-finite number")
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: str(kv[0]))
        body = ",".join(f"{json.dumps(str(k))}:{_fmt(v)}" for k, v in items)
        return "{" + body + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    raise InputError(f"cannot serialize {type(value).__name__}")


def dumps_stable(obj) -> str:
    """Canonical JSON text; byte-identical across repeat runs."""
    return _fmt(obj) + "\n"
