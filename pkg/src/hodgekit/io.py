"""JSON helpers: complex numbers as ``[re, im]`` pairs, diagnostics for malformed input."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exceptions import ValidationError


class InputError(ValidationError):
    """Scenario or data file could not be read or parsed."""


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_json(text, str(path))


def parse_json(text: str, source: str = "<string>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top-level JSON value must be an object")
    return doc


def decode_complex(x) -> complex:
    """A number or an ``[re, im]`` pair."""
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InputError(f"cannot read {x!r} as a complex number")


def decode_matrix(x, shape: tuple | None = None) -> np.ndarray:
    """Nested lists whose leaves are ``[re, im]`` pairs, optionally shape-checked."""
    def rec(v):
        if isinstance(v, list) and len(v) == 2 and all(isinstance(e, (int, float)) for e in v):
            return complex(v[0], v[1])
        if isinstance(v, list):
            return [rec(e) for e in v]
        raise InputError(f"cannot read {v!r} as complex data; use [re, im] pairs")
    try:
        arr = np.asarray(rec(x), dtype=complex)
    except ValueError:
        raise InputError("ragged complex array") from None
    if shape is not None and arr.shape != tuple(shape):
        raise InputError(f"expected complex array of shape {tuple(shape)}, got {arr.shape}")
    return arr


def encode(obj):
    """Recursively convert numpy / complex / Fraction values to JSON-safe data."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, (complex, np.complexfloating)):
        return [_finite(obj.real), _finite(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return _finite(float(obj))
    return obj


def _finite(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def dumps(obj) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2) + "\n"
