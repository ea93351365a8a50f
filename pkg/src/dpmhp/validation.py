"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numpy as np


def as_point(y, *, dim: int | None = None, name: str = "point") -> np.ndarray:
    """Coerce to a finite 1-d float64 vector, optionally of a fixed dimension."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a 1-d coordinate sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: {name} has {arr.shape[0]} coordinates, expected {dim}")
    return arr


def as_points(X, *, dim: int | None = None, name: str = "points",
              allow_empty: bool = False) -> np.ndarray:
    """Coerce to a finite (count, dim) float64 array.

    A 1-d input is read as a sequence of scalar points and becomes a
    single column.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d (count, dim), got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise ValueError(f"{name} is empty")
    if arr.shape[0] > 0 and arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one coordinate per row")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: {name} has dimension {arr.shape[1]}, expected {dim}")
    return arr


def check_same_dim(a: np.ndarray, b: np.ndarray, *, names=("first", "second")) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {names[0]} has dimension {a.shape[-1]}, "
            f"{names[1]} has dimension {b.shape[-1]}"
        )
