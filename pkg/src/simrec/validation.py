"""Small input-validation helpers used at API boundaries."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch


def check_texts(texts: Sequence[str], name: str = "texts") -> list[str]:
    """Validate an iterable of strings and return it as a list."""
    out = list(texts)
    for i, t in enumerate(out):
        if not isinstance(t, str):
            raise TypeError(f"{name}[{i}] is {type(t).__name__}, expected str")
    return out


def check_probability_vector(probs, tol: float = 1e-4) -> np.ndarray:
    """Validate a 1-D probability vector (non-negative, sums to 1 within tol)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise DimensionMismatch(f"expected 1-D probability vector, got shape {p.shape}")
    if p.size == 0:
        raise DimensionMismatch("empty probability vector")
    if np.any(p < -tol):
        raise ValueError("probability vector has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"probability vector sums to {total}, expected 1 +/- {tol}")
    return p


def check_same_length(a, b, what: str = "sequences"):
    if len(a) != len(b):
        raise LengthMismatch(f"{what} have lengths {len(a)} and {len(b)}")


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
