"""Winner-takes-all loss over a hypothesis set, with gradient routing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .metrics import WtaMetric, _grads_from_diffs, _sq_norms, _values_from_sq
from .validation import as_point, as_points


@dataclass
class WtaResult:
    """Loss of the closest hypothesis plus the gradient routing weights.

    ``loss`` is always the metric distance from the winning hypothesis to
    the observation.  ``weights`` carry the relaxed gradient shares:
    1 - epsilon at the winner and epsilon / (N - 1) elsewhere, one-hot at
    epsilon = 0.  A single hypothesis always has weight 1.
    """

    loss: float
    winner: int
    weights: np.ndarray


def relaxation_weights(n_hypotheses: int, winner: int, epsilon: float) -> np.ndarray:
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    if n_hypotheses < 1:
        raise ValueError("need at least one hypothesis")
    if not 0 <= winner < n_hypotheses:
        raise ValueError(f"winner {winner} out of range for {n_hypotheses} hypotheses")
    if n_hypotheses == 1:
        return np.ones(1)
    weights = np.full(n_hypotheses, epsilon / (n_hypotheses - 1))
    weights[winner] = 1.0 - epsilon
    return weights


def wta_evaluate(hyps, y, metric: WtaMetric, epsilon: float = 0.0) -> WtaResult:
    """Distance from ``y`` to its closest hypothesis.

    The winner is the lowest index attaining the minimum distance, which
    makes exact ties reproducible.  Both supported metrics are monotone in
    the Euclidean norm, so they always agree on the winner.
    """
    hyps = as_points(hyps, name="hyps")
    y = as_point(y, dim=hyps.shape[1], name="y")
    dists = _values_from_sq(metric, _sq_norms(hyps - y))
    winner = int(np.argmin(dists))
    return WtaResult(
        loss=float(dists[winner]),
        winner=winner,
        weights=relaxation_weights(hyps.shape[0], winner, epsilon),
    )


def wta_gradients(hyps, y, metric: WtaMetric, epsilon: float = 0.0) -> np.ndarray:
    """Gradient of the (relaxed) loss with respect to every hypothesis.

    Row i is weight_i times the metric gradient of d(hyps[i], y); with
    epsilon = 0 only the winner's row is nonzero.
    """
    hyps = as_points(hyps, name="hyps")
    y = as_point(y, dim=hyps.shape[1], name="y")
    diffs = hyps - y
    sq = _sq_norms(diffs)
    winner = int(np.argmin(_values_from_sq(metric, sq)))
    weights = relaxation_weights(hyps.shape[0], winner, epsilon)
    return weights[:, None] * _grads_from_diffs(metric, diffs, sq)


class BatchWta(NamedTuple):
    losses: np.ndarray    # (B,) distance to the winning hypothesis
    relaxed: np.ndarray   # (B,) epsilon-weighted loss whose gradient is ``grads``
    winners: np.ndarray   # (B,) lowest-index argmin per observation
    grads: np.ndarray     # (B, N, n) gradient with respect to each hypothesis


def batch_wta(hyps, Y, metric: WtaMetric, epsilon: float = 0.0) -> BatchWta:
    """Vectorized loss and hypothesis gradients for a batch of observations.

    ``hyps`` is either one shared (N, n) set or a per-observation
    (B, N, n) stack; ``Y`` is (B, n).
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    H = np.asarray(hyps, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if H.ndim == 2:
        H = np.broadcast_to(H, (Y.shape[0],) + H.shape)
    if H.ndim != 3 or H.shape[1] == 0:
        raise ValueError("hyps must be a nonempty (N, n) or (B, N, n) array")
    batch, n_hyp, _ = H.shape
    diffs = H - Y[:, None, :]
    sq = _sq_norms(diffs)
    vals = _values_from_sq(metric, sq)
    winners = np.argmin(vals, axis=1)
    rows = np.arange(batch)
    losses = vals[rows, winners]
    if epsilon == 0.0 or n_hyp == 1:
        # hard routing: only the winner's row is nonzero
        win_diffs = diffs[rows, winners]
        win_sq = sq[rows, winners]
        grads = np.zeros_like(diffs)
        grads[rows, winners] = _grads_from_diffs(metric, win_diffs, win_sq)
        return BatchWta(losses=losses, relaxed=losses.copy(), winners=winners, grads=grads)
    weights = np.full((batch, n_hyp), epsilon / (n_hyp - 1))
    weights[rows, winners] = 1.0 - epsilon
    relaxed = np.einsum("bn,bn->b", weights, vals)
    grads = weights[:, :, None] * _grads_from_diffs(metric, diffs, sq)
    return BatchWta(losses=losses, relaxed=relaxed, winners=winners, grads=grads)
