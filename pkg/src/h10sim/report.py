"""JSON report serialization.

Reports are canonical: keys sorted, floats rounded to 12 significant digits,
non-finite numbers written as strings. Wall-clock data lives only under
"timings" keys, which ``strip_timings`` removes for reproducibility checks.
"""

from __future__ import annotations

import enum
import json
import math
from fractions import Fraction

import numpy as np

SCHEMA = "h10sim.report/1"
FLOAT_DIGITS = 12


def _float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    r = float(f"{x:.{FLOAT_DIGITS}g}")
    return 0.0 if r == 0 else r  # no negative zero


def canonical(obj):
    """Convert a report tree into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return _float(c.real) if c.imag == 0 else [_float(c.real), _float(c.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timings(obj):
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in ("timings", "timing")}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj
