"""Direct hypothesis placement on a fixed sample set (no network).

Minimizing the expected winner-takes-all loss over samples places N
representative points on the sampled density: with the squared Euclidean
metric this is k-means-style quantization, with the log distance the
points settle on the density itself and their cells approach equal data
shares.
"""

from __future__ import annotations

import csv

import numpy as np

from .metrics import WtaMetric, nearest_indices
from .optim import TrainConfig, TrainingDiverged, epsilon_at, learning_rate_at, make_stepper
from .rng import stream
from .validation import as_points
from .wta import batch_wta

DEFAULT_QUANTIZER_CONFIG = TrainConfig(
    learning_rate=1e-2,
    epochs=100,
    batch_size=256,
    epsilon=0.05,
    lr_decay=0.5,
    lr_decay_every=25,
)


def fit_hypotheses(samples, n_hypotheses: int, metric: WtaMetric,
                   cfg: TrainConfig | None = None) -> np.ndarray:
    """Fit N hypotheses to ``samples`` by stochastic gradient descent.

    Hypotheses start at N distinct random sample rows and follow
    mini-batch gradients of the mean (relaxed) winner-takes-all loss.
    ``metric`` always wins over ``cfg.metric``.  Deterministic given
    ``cfg.seed``.
    """
    samples = as_points(samples, name="samples")
    if n_hypotheses < 1:
        raise ValueError(f"n_hypotheses must be >= 1, got {n_hypotheses}")
    if n_hypotheses > samples.shape[0]:
        raise ValueError(
            f"n_hypotheses {n_hypotheses} exceeds the sample count {samples.shape[0]}")
    cfg = DEFAULT_QUANTIZER_CONFIG if cfg is None else cfg

    init_rng = stream(cfg.seed, "quantizer/init")
    idx = init_rng.choice(samples.shape[0], size=n_hypotheses, replace=False)
    hyps = samples[idx].copy()

    arrays = [hyps]
    stepper = make_stepper(cfg, arrays)
    shuffle_rng = stream(cfg.seed, "quantizer/shuffle")
    count = samples.shape[0]

    for epoch in range(cfg.epochs):
        lr = learning_rate_at(cfg, epoch)
        eps = epsilon_at(cfg, epoch)
        order = shuffle_rng.permutation(count)
        for start in range(0, count, cfg.batch_size):
            batch = samples[order[start:start + cfg.batch_size]]
            res = batch_wta(hyps, batch, metric, eps)
            stepper.step(arrays, [res.grads.mean(axis=0)], lr)
        if not np.all(np.isfinite(hyps)):
            raise TrainingDiverged(f"hypotheses became non-finite in epoch {epoch}", epoch)
    return hyps


def _cell_means(samples: np.ndarray, winners: np.ndarray, n_hyp: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(winners, minlength=n_hyp).astype(np.float64)
    sums = np.zeros((n_hyp, samples.shape[1]))
    np.add.at(sums, winners, samples)
    return sums, counts


def lloyd_refine(samples, hyps, metric: WtaMetric, iterations: int = 10) -> np.ndarray:
    """Batch alternation refinement of a hypothesis set.

    Each iteration assigns every sample to its nearest hypothesis, reseeds
    empty cells at the sample farthest from its winner, then moves each
    hypothesis: to its cell mean for the squared Euclidean metric (exact
    Lloyd step, mean loss never increases), or by one damped gradient step
    of the summed log distance.  The returned set keeps the same size.
    """
    samples = as_points(samples, name="samples")
    hyps = as_points(hyps, name="hyps", dim=samples.shape[1]).copy()
    n_hyp = hyps.shape[0]

    for _ in range(int(iterations)):
        winners = nearest_indices(samples, hyps)
        counts = np.bincount(winners, minlength=n_hyp)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            dist_to_winner = np.sqrt(((samples - hyps[winners]) ** 2).sum(axis=1))
            order = np.argsort(dist_to_winner)[::-1]
            for rank, cell in enumerate(empty):
                hyps[cell] = samples[order[rank % samples.shape[0]]]
            winners = nearest_indices(samples, hyps)
            counts = np.bincount(winners, minlength=n_hyp)

        occupied = counts > 0
        if metric.kind == "l2":
            sums, cnt = _cell_means(samples, winners, n_hyp)
            hyps[occupied] = sums[occupied] / cnt[occupied, None]
        else:
            diffs = hyps[winners] - samples
            r = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
            denom = r * (r + metric.delta)
            contrib = np.zeros_like(diffs)
            np.divide(diffs, denom[:, None], out=contrib, where=denom[:, None] > 0.0)
            grad_sum = np.zeros_like(hyps)
            np.add.at(grad_sum, winners, contrib)
            r_sum = np.bincount(winners, weights=r, minlength=n_hyp)
            cnt = counts.astype(np.float64)
            cnt_safe = np.where(occupied, cnt, 1.0)
            grad = grad_sum / cnt_safe[:, None]
            r_mean = r_sum / cnt_safe
            step = -0.5 * (r_mean ** 2)[:, None] * grad
            # clip each move to the mean cell distance so a near-singular
            # gradient cannot throw the hypothesis out of its cell
            norms = np.sqrt(np.einsum("ij,ij->i", step, step))
            cap = np.where(norms > r_mean, np.divide(r_mean, norms, out=np.ones_like(norms),
                                                     where=norms > 0.0), 1.0)
            hyps[occupied] += (step * cap[:, None])[occupied]
    return hyps


def save_hypotheses_csv(path, hyps) -> None:
    """One row per hypothesis with header h0..h{n-1}."""
    hyps = as_points(hyps, name="hyps")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"h{j}" for j in range(hyps.shape[1])])
        for row in hyps:
            writer.writerow([repr(float(v)) for v in row])


def load_hypotheses_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or not header[0].startswith("h"):
            raise ValueError(f"{path} does not look like a hypothesis CSV")
        rows = [[float(v) for v in row] for row in reader if row]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
