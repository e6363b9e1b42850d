"""Stable machine-readable output: JSON and CSV with 17-significant-digit floats.

Floats are written as ``format(x, ".17g")`` so that every value round-trips
exactly and two runs with equal inputs produce byte-identical files.
Non-finite floats become JSON ``null``.
"""

from __future__ import annotations

import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, Enum):
        return _encode(obj.value, indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items())
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """Serialise ``obj`` to JSON text with exact float formatting."""
    return _encode(obj, indent, 0) + "\n"


def atoms_csv(runs) -> str:
    """``replicate,kind,position`` rows, pendant atoms first within a replicate."""
    buf = io.StringIO()
    buf.write("replicate,kind,position\n")
    for r in runs:
        for kind, proc in (("p", r.pendant_atoms), ("i", r.interior_atoms)):
            for x in proc.atoms:
                buf.write(f"{r.replicate},{kind},{fmt_float(x)}\n")
    return buf.getvalue()


def maxima_csv(runs) -> str:
    """``replicate,status,z_t,mp,mi`` rows; a missing maximum is an empty field."""
    buf = io.StringIO()
    buf.write("replicate,status,z_t,mp,mi\n")
    for r in runs:
        mp = "" if r.m_pendant is None else fmt_float(r.m_pendant)
        mi = "" if r.m_interior is None else fmt_float(r.m_interior)
        buf.write(f"{r.replicate},{r.status.value},{fmt_float(r.z_t)},{mp},{mi}\n")
    return buf.getvalue()


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
