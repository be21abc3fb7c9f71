"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_float_array(values, name: str, ndim: int | None = None) -> np.ndarray:
    """Coerce to a float64 ndarray, optionally enforcing dimensionality."""
    arr = np.asarray(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    return arr


def check_shape(arr, shape: tuple, name: str) -> None:
    """Check an exact shape; entries of -1 match any size."""
    actual = tuple(arr.shape)
    if len(actual) != len(shape) or any(
        e != -1 and e != a for e, a in zip(shape, actual)
    ):
        raise ValueError(f"{name}: expected shape {shape}, got {actual}")


def check_finite(arr, name: str) -> None:
    arr = np.asarray(arr)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: contains non-finite values")


def check_positive_int(value: int, name: str, minimum: int = 1) -> int:
    if not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValueError(f"{name}: expected integer >= {minimum}, got {value!r}")
    return int(value)
