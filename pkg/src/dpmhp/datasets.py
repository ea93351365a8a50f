"""Seedable generators for the experiment distributions, with analytic moments."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_points

DATASET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CallCenterModel:
    """Waiting time until the fifth call, with a sinusoidal arrival rate.

    Over the time of day x in [x_min, x_max] the arrival rate is
    ``lambda(x) = lambda0 * (1 + alpha * sin(pi (x - x_min) / (x_max - x_min)))``
    and the observed label is the waiting time of ``stages`` exponential
    interarrivals at that rate, i.e. an Erlang(lambda(x), stages) draw.
    The conditional mean is stages/lambda(x), the variance stages/lambda(x)^2.
    """

    lambda0: float = 1.0
    alpha: float = 0.5
    x_min: float = 6.0
    x_max: float = 20.0
    stages: int = 5

    def __post_init__(self) -> None:
        if not self.lambda0 > 0.0:
            raise ValueError(f"lambda0 must be > 0, got {self.lambda0}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")

    def rate(self, x):
        x = np.asarray(x, dtype=np.float64)
        phase = np.pi * (x - self.x_min) / (self.x_max - self.x_min)
        return self.lambda0 * (1.0 + self.alpha * np.sin(phase))

    def conditional_mean(self, x):
        return self.stages / self.rate(x)

    def conditional_var(self, x):
        return self.stages / self.rate(x) ** 2


def erlang_pdf(y, rate: float, stages: int = 5):
    """Density of the sum of ``stages`` exponential interarrivals; 0 for y < 0."""
    if not rate > 0.0:
        raise ValueError(f"rate must be > 0, got {rate}")
    if int(stages) != stages or stages < 1:
        raise ValueError(f"stages must be a positive integer, got {stages}")
    stages = int(stages)
    y_arr = np.asarray(y, dtype=np.float64)
    out = np.zeros_like(y_arr, dtype=np.float64)
    mask = y_arr >= 0.0
    yp = y_arr[mask]
    out[mask] = rate ** stages * yp ** (stages - 1) * np.exp(-rate * yp) / math.factorial(stages - 1)
    if np.isscalar(y):
        return float(out)
    return out


def sample_call_center(model: CallCenterModel, size: int, seed: int):
    """Pairs (x, y): x uniform over the day, y the Erlang waiting time at x.

    y is the sum of ``stages`` inverse-CDF exponential draws, each
    -log(U)/lambda(x), so the draw is exact.  Returns two arrays of length
    ``size``.
    """
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(model.x_min, model.x_max, size=size)
    u = 1.0 - rng.random(size=(size, model.stages))   # in (0, 1], keeps log finite
    y = -np.log(u).sum(axis=1) / model.rate(x)
    return x, y


def sample_waiting_times(model: CallCenterModel, x: float, size: int, seed: int) -> np.ndarray:
    """Conditional waiting-time draws at one fixed time of day."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(size=(size, model.stages))
    return -np.log(u).sum(axis=1) / float(model.rate(x))


class MixtureModel:
    """Gaussian mixture with explicit weights, means and covariances."""

    def __init__(self, weights, means, covariances):
        weights = np.asarray(weights, dtype=np.float64)
        means = np.asarray(means, dtype=np.float64)
        covariances = np.asarray(covariances, dtype=np.float64)
        if weights.ndim != 1 or np.any(weights < 0.0):
            raise ValueError("weights must be a 1-d nonnegative sequence")
        if not np.isclose(weights.sum(), 1.0, atol=1e-8):
            raise ValueError(f"weights must sum to 1, got {weights.sum()}")
        if means.ndim != 2 or means.shape[0] != weights.shape[0]:
            raise ValueError("means must be (components, dim)")
        if covariances.shape != (weights.shape[0], means.shape[1], means.shape[1]):
            raise ValueError("covariances must be (components, dim, dim)")
        if not np.allclose(covariances, np.swapaxes(covariances, 1, 2)):
            raise ValueError("covariances must be symmetric")
        try:
            chols = np.linalg.cholesky(covariances)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariances must be positive definite") from exc
        self.weights = weights / weights.sum()
        self.means = means
        self.covariances = covariances
        self._chols = chols

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def sample_mixture(model: MixtureModel, size: int, seed: int) -> np.ndarray:
    """Component choice by weight, then a Gaussian draw via the Cholesky factor."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    comp = rng.choice(model.n_components, size=size, p=model.weights)
    z = rng.standard_normal(size=(size, model.dim))
    return model.means[comp] + np.einsum("kij,kj->ki", model._chols[comp], z)


def mixture2d_model() -> MixtureModel:
    """Two-dimensional three-component mixture used by the share-uniformity demo.

    Unequal weights and anisotropic covariances give clearly separated
    high- and low-density regions.
    """
    return MixtureModel(
        weights=(0.5, 0.3, 0.2),
        means=((-2.0, 0.0), (2.0, 1.5), (0.5, -2.0)),
        covariances=(
            ((0.45, 0.20), (0.20, 0.30)),
            ((1.20, -0.40), (-0.40, 0.60)),
            ((0.25, 0.00), (0.00, 0.90)),
        ),
    )


def conditional_surrogate_params(X):
    """Mixture parameters of the conditional benchmark density p(y | x).

    ``X`` is (..., 4) with coordinates in [-1, 1].  The label density is a
    two-component 2-d Gaussian mixture with axis-aligned covariances whose
    parameters vary smoothly with x:

        c   = 2.0 + 1.5 sin(pi x1 / 2)          (mode separation scale)
        w1  = 0.55 + 0.05 sin(pi x4)            (second weight 1 - w1)
        mu1 = ( c/2 + 0.25 x2,  0.8 x3)
        mu2 = (-c/2 - 0.25 x2, -0.8 x3 + 0.4 x4)
        sd1 = (0.35 + 0.05 cos(pi x2), 0.30)
        sd2 = (0.30, 0.35 + 0.05 sin(pi x3))

    The separation sweeps from merged (c = 0.5 at x1 = -1) to widely split
    (c = 3.5 at x1 = +1), so the density is clearly bimodal (means at
    least four standard deviations apart) for most inputs while the
    merged region connects the modes smoothly.
    Returns (weights (..., 2), means (..., 2, 2), sds (..., 2, 2)).
    """
    X = np.asarray(X, dtype=np.float64)
    x1, x2, x3, x4 = X[..., 0], X[..., 1], X[..., 2], X[..., 3]
    half = 0.5 * (2.0 + 1.5 * np.sin(0.5 * np.pi * x1))
    w1 = 0.55 + 0.05 * np.sin(np.pi * x4)
    weights = np.stack([w1, 1.0 - w1], axis=-1)
    mu1 = np.stack([half + 0.25 * x2, 0.8 * x3], axis=-1)
    mu2 = np.stack([-half - 0.25 * x2, -0.8 * x3 + 0.4 * x4], axis=-1)
    means = np.stack([mu1, mu2], axis=-2)
    sd1 = np.stack([0.35 + 0.05 * np.cos(np.pi * x2), np.full_like(x2, 0.30)], axis=-1)
    sd2 = np.stack([np.full_like(x3, 0.30), 0.35 + 0.05 * np.sin(np.pi * x3)], axis=-1)
    sds = np.stack([sd1, sd2], axis=-2)
    return weights, means, sds


def sample_conditional_surrogate(size: int, seed: int):
    """Pairs (x, y): x uniform on [-1, 1]^4, y from the bimodal conditional mixture."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(size, 4))
    weights, means, sds = conditional_surrogate_params(X)
    comp = (rng.random(size) >= weights[:, 0]).astype(np.intp)
    z = rng.standard_normal(size=(size, 2))
    rows = np.arange(size)
    Y = means[rows, comp] + sds[rows, comp] * z
    return X, Y


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def dump_dataset(csv_path, X, Y, params: dict | None = None) -> None:
    """CSV with header x0..x{m-1},y0..y{n-1}; parameters go to a JSON sidecar."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    Y = as_points(Y, name="Y")
    if X.shape[0] not in (0, Y.shape[0]):
        raise ValueError("X and Y row counts differ")
    m = X.shape[1] if X.size or X.ndim == 2 else 0
    header = [f"x{j}" for j in range(m)] + [f"y{j}" for j in range(Y.shape[1])]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(Y.shape[0]):
            row = [repr(float(v)) for v in X[k]] if m else []
            row += [repr(float(v)) for v in Y[k]]
            writer.writerow(row)
    if params is not None:
        payload = {"schema_version": DATASET_SCHEMA_VERSION, **params}
        sidecar_path(csv_path).write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_dataset(csv_path):
    """Returns (X (K, m), Y (K, n), params or None); m may be zero."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    m = sum(1 for name in header if name.startswith("x"))
    n = len(header) - m
    if n < 1:
        raise ValueError(f"{csv_path} has no label columns")
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    X = data[:, :m]
    Y = data[:, m:]
    params = None
    side = sidecar_path(csv_path)
    if side.exists():
        params = json.loads(side.read_text(encoding="utf-8"))
    return X, Y, params
