"""Distance functions for the winner-takes-all loss, with exact gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_point

SQUARED_EUCLIDEAN = "l2"
LOG_DISTANCE = "ldp"

_KINDS = (SQUARED_EUCLIDEAN, LOG_DISTANCE)


@dataclass(frozen=True)
class WtaMetric:
    """Distance choice used inside the winner-takes-all loss.

    ``"l2"`` is the squared Euclidean distance.  ``"ldp"`` is
    ``log(||a - b|| + delta)``: the logarithm stops far-away points from
    dominating, which lets a trained hypothesis ensemble settle on the
    data density itself instead of a flattened power of it.  ``delta``
    keeps the value finite on exact hits; it should be small against the
    data diameter (see :func:`default_delta`).
    """

    kind: str = SQUARED_EUCLIDEAN
    delta: float = 1e-3

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == LOG_DISTANCE and not self.delta > 0.0:
            raise ValueError(f"delta must be > 0 for the log distance, got {self.delta}")

    @classmethod
    def l2(cls) -> "WtaMetric":
        return cls(SQUARED_EUCLIDEAN)

    @classmethod
    def ldp(cls, delta: float = 1e-3) -> "WtaMetric":
        return cls(LOG_DISTANCE, float(delta))


def _sq_norms(diffs: np.ndarray) -> np.ndarray:
    # einsum keeps the reduction order identical between the single-pair
    # and the batched entry points, so their values agree bitwise
    return np.einsum("...i,...i->...", diffs, diffs)


def _values_from_sq(metric: WtaMetric, sq: np.ndarray) -> np.ndarray:
    if metric.kind == SQUARED_EUCLIDEAN:
        return sq
    return np.log(np.sqrt(sq) + metric.delta)


def _grads_from_diffs(metric: WtaMetric, diffs: np.ndarray, sq: np.ndarray) -> np.ndarray:
    if metric.kind == SQUARED_EUCLIDEAN:
        return 2.0 * diffs
    r = np.sqrt(sq)
    denom = r * (r + metric.delta)
    out = np.zeros_like(diffs)
    np.divide(diffs, denom[..., None], out=out, where=denom[..., None] > 0.0)
    return out


def squared_distance(a, b) -> float:
    """Squared Euclidean distance between two points of equal dimension."""
    a = as_point(a, name="a")
    b = as_point(b, name="b", dim=a.shape[0])
    return float(_sq_norms(a - b))


def log_distance(a, b, delta: float) -> float:
    """``log(||a - b|| + delta)``; minimum ``log(delta)``, attained iff a == b."""
    if not delta > 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    a = as_point(a, name="a")
    b = as_point(b, name="b", dim=a.shape[0])
    return float(np.log(np.sqrt(_sq_norms(a - b)) + delta))


def distance(metric: WtaMetric, a, b) -> float:
    """Evaluate the chosen metric on one pair of points."""
    if metric.kind == SQUARED_EUCLIDEAN:
        return squared_distance(a, b)
    return log_distance(a, b, metric.delta)


def metric_gradient(metric: WtaMetric, a, b) -> np.ndarray:
    """Gradient of ``distance(metric, a, b)`` with respect to ``a``.

    The log distance is not differentiable at a == b; the zero vector is
    returned there so an exactly hit winner stays put.
    """
    a = as_point(a, name="a")
    b = as_point(b, name="b", dim=a.shape[0])
    diff = a - b
    sq = _sq_norms(diff[None, :])
    return _grads_from_diffs(metric, diff[None, :], sq)[0]


def metric_distances(metric: WtaMetric, points: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distances from each row of ``points`` to ``y`` under ``metric``."""
    points = np.asarray(points, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return _values_from_sq(metric, _sq_norms(points - y))


def nearest_indices(points, refs, chunk: int = 1 << 22) -> np.ndarray:
    """Index of the Euclidean-nearest row of ``refs`` for every row of ``points``.

    Ties resolve to the lowest index.  Works blockwise so the
    (points x refs) distance matrix never exceeds ``chunk`` entries.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    if refs.shape[0] == 0:
        raise ValueError("refs is empty")
    if points.shape[1] != refs.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have dimension {points.shape[1]}, "
            f"refs have dimension {refs.shape[1]}"
        )
    ref_sq = np.einsum("ij,ij->i", refs, refs)
    out = np.empty(points.shape[0], dtype=np.intp)
    step = max(1, chunk // max(refs.shape[0], 1))
    for start in range(0, points.shape[0], step):
        block = points[start:start + step]
        d2 = block @ refs.T
        d2 *= -2.0
        d2 += np.einsum("ij,ij->i", block, block)[:, None]
        d2 += ref_sq[None, :]
        out[start:start + step] = np.argmin(d2, axis=1)
    return out


def default_delta(samples, fraction: float = 1e-3, max_points: int = 1000) -> float:
    """Log-distance offset scaled to the data: ``fraction`` of its diameter.

    The diameter is the largest pairwise distance over an evenly strided
    subsample of at most ``max_points`` rows; striding keeps the estimate
    deterministic.  Degenerate single-point clouds fall back to an
    absolute offset of ``fraction``.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("samples is empty")
    stride = -(-pts.shape[0] // max_points)
    sub = pts[::max(1, stride)]
    sq = np.einsum("ij,ij->i", sub, sub)
    d2 = sq[:, None] - 2.0 * (sub @ sub.T) + sq[None, :]
    diameter = float(np.sqrt(max(float(d2.max()), 0.0)))
    if diameter == 0.0:
        return float(fraction)
    return float(fraction) * diameter
