"""Feed-forward hypothesis network with hand-written backpropagation.

The network maps an m-dimensional feature vector to N hypotheses of
dimension n through a stack of fully connected layers; the output layer is
linear and its N*n values are reshaped row-major into the hypothesis set.
Training backpropagates the winner-takes-all loss, holding the winner
assignment fixed at its forward-pass value (the min is piecewise smooth,
so this is the gradient almost everywhere).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import WtaMetric
from .optim import TrainConfig, TrainingDiverged, epsilon_at, learning_rate_at, make_stepper
from .rng import derive_seed, stream
from .validation import as_point, as_points
from .wta import batch_wta

ACTIVATIONS = ("tanh", "relu")

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of the hypothesis network."""

    input_dim: int
    hidden_layers: tuple[int, ...]
    n_hypotheses: int
    label_dim: int
    activation: str = "tanh"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim < 1 or self.n_hypotheses < 1 or self.label_dim < 1:
            raise ValueError("input_dim, n_hypotheses and label_dim must all be >= 1")
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError(f"hidden layer widths must be >= 1, got {self.hidden_layers}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def output_dim(self) -> int:
        return self.n_hypotheses * self.label_dim

    def layer_dims(self) -> list[int]:
        return [self.input_dim, *self.hidden_layers, self.output_dim]


class NetworkParams:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors."""

    def __init__(self, spec: NetworkSpec, weights: list[np.ndarray], biases: list[np.ndarray]):
        dims = spec.layer_dims()
        if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
            raise ValueError("layer count does not match the spec")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} has shape {w.shape}/{b.shape}, "
                                 f"expected {(dims[i], dims[i + 1])}/{(dims[i + 1],)}")
        self.spec = spec
        self.weights = weights
        self.biases = biases

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec,
                             [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        """Flat list of parameter arrays in a stable order (views, not copies)."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def init_network(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Uniform(-a, a) weights with a = 1/sqrt(fan_in); zero biases."""
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims()
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        a = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(spec, weights, biases)


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_grad(name: str, a: np.ndarray) -> np.ndarray:
    # derivative expressed through the activation output
    if name == "tanh":
        return 1.0 - a * a
    return (a > 0.0).astype(np.float64)


def _forward_layers(params: NetworkParams, X: np.ndarray, *, check: bool) -> list[np.ndarray]:
    """All layer outputs [X, a_1, ..., output]; output layer is linear."""
    acts = [X]
    last = len(params.weights) - 1
    a = X
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        # check the pre-activation: a saturating activation would mask an inf
        if check and not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite values in the output of layer {i}")
        a = z if i == last else _activate(params.spec.activation, z)
        acts.append(a)
    return acts


def forward(params: NetworkParams, x) -> np.ndarray:
    """Hypothesis set (N, n) for one feature vector."""
    x = as_point(x, dim=params.spec.input_dim, name="x")
    return forward_batch(params, x[None, :])[0]


def forward_batch(params: NetworkParams, X) -> np.ndarray:
    """Hypothesis sets (B, N, n) for a batch of feature vectors."""
    X = as_points(X, dim=params.spec.input_dim, name="X")
    out = _forward_layers(params, X, check=False)[-1]
    spec = params.spec
    return out.reshape(X.shape[0], spec.n_hypotheses, spec.label_dim)


def _backward_batch(params: NetworkParams, X: np.ndarray, Y: np.ndarray,
                    metric: WtaMetric, epsilon: float):
    """Gradient of the batch-mean relaxed loss for every parameter.

    Returns (winner losses (B,), relaxed losses (B,), grads aligned with
    ``params.arrays()``, winners (B,)).
    """
    spec = params.spec
    batch = X.shape[0]
    acts = _forward_layers(params, X, check=True)
    hyps = acts[-1].reshape(batch, spec.n_hypotheses, spec.label_dim)
    res = batch_wta(hyps, Y, metric, epsilon)
    delta = res.grads.reshape(batch, spec.output_dim) / batch
    grad_w: list[np.ndarray] = [None] * len(params.weights)
    grad_b: list[np.ndarray] = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * _activation_grad(spec.activation, acts[i])
    grads: list[np.ndarray] = []
    for gw, gb in zip(grad_w, grad_b):
        grads.append(gw)
        grads.append(gb)
    return res.losses, res.relaxed, grads, res.winners


def backward(params: NetworkParams, x, y, metric: WtaMetric,
             epsilon: float = 0.0) -> tuple[float, NetworkParams]:
    """Relaxed loss for one (x, y) pair and its exact parameter gradient.

    The winner assignment is held fixed at its forward-pass value.  At
    epsilon = 0 the returned loss equals the plain winner-takes-all loss.
    """
    x = as_point(x, dim=params.spec.input_dim, name="x")
    y = as_point(y, dim=params.spec.label_dim, name="y")
    _, relaxed, grads, _ = _backward_batch(params, x[None, :], y[None, :], metric, epsilon)
    grad_params = NetworkParams(params.spec, grads[0::2], grads[1::2])
    return float(relaxed[0]), grad_params


@dataclass
class TrainResult:
    params: NetworkParams
    loss_history: list[float] = field(default_factory=list)    # per-epoch mean winner loss
    alive_history: list[int] = field(default_factory=list)     # hypotheses winning >= 1 sample
    epsilon_history: list[float] = field(default_factory=list)


def train(spec: NetworkSpec, X, Y, cfg: TrainConfig) -> TrainResult:
    """Mini-batch training of the winner-takes-all objective.

    Deterministic given ``cfg.seed``: initialization and batch shuffling
    draw from named streams rooted at it, and batch gradients reduce in a
    fixed order.
    """
    X = as_points(X, dim=spec.input_dim, name="X")
    Y = as_points(Y, dim=spec.label_dim, name="Y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if cfg.metric is None:
        raise ValueError("cfg.metric must be set before training")

    params = init_network(spec, derive_seed(cfg.seed, "network/init"))
    arrays = params.arrays()
    stepper = make_stepper(cfg, arrays)
    shuffle_rng = stream(cfg.seed, "network/shuffle")
    count = X.shape[0]
    result = TrainResult(params=params)

    for epoch in range(cfg.epochs):
        lr = learning_rate_at(cfg, epoch)
        eps = epsilon_at(cfg, epoch)
        order = shuffle_rng.permutation(count)
        loss_sum = 0.0
        winner_counts = np.zeros(spec.n_hypotheses, dtype=np.int64)
        for start in range(0, count, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            try:
                losses, _, grads, winners = _backward_batch(params, X[idx], Y[idx],
                                                            cfg.metric, eps)
            except FloatingPointError as exc:
                raise TrainingDiverged(f"training diverged in epoch {epoch}: {exc}",
                                       epoch) from exc
            stepper.step(arrays, grads, lr)
            loss_sum += float(losses.sum())
            winner_counts += np.bincount(winners, minlength=spec.n_hypotheses)
        mean_loss = loss_sum / count
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"training loss became non-finite in epoch {epoch}", epoch)
        result.loss_history.append(mean_loss)
        result.alive_history.append(int(np.count_nonzero(winner_counts)))
        result.epsilon_history.append(eps)
    return result


@dataclass
class MhpModel:
    """Trained hypothesis network plus its input standardization and metric."""

    spec: NetworkSpec
    params: NetworkParams
    metric: WtaMetric
    x_mean: np.ndarray
    x_scale: np.ndarray

    def predict(self, X) -> np.ndarray:
        """Hypothesis sets (B, N, n) for raw (unstandardized) features."""
        X = as_points(X, dim=self.spec.input_dim, name="X")
        return forward_batch(self.params, (X - self.x_mean) / self.x_scale)

    def predict_one(self, x) -> np.ndarray:
        x = as_point(x, dim=self.spec.input_dim, name="x")
        return self.predict(x[None, :])[0]


def standardization_constants(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and scale; constant features keep scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    return mean, scale


def fit_mhp(X, Y, spec: NetworkSpec, cfg: TrainConfig) -> tuple[MhpModel, TrainResult]:
    """Standardize features, train, and wrap the result as a model."""
    X = as_points(X, dim=spec.input_dim, name="X")
    Y = as_points(Y, dim=spec.label_dim, name="Y")
    if cfg.metric is None:
        raise ValueError("cfg.metric must be set before training")
    mean, scale = standardization_constants(X)
    result = train(spec, (X - mean) / scale, Y, cfg)
    model = MhpModel(spec=spec, params=result.params, metric=cfg.metric,
                     x_mean=mean, x_scale=scale)
    return model, result


def save_model(model: MhpModel, path) -> None:
    """Persist as a self-describing JSON file; loading is bit-compatible."""
    payload = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": "mhp-model",
        "spec": {
            "input_dim": model.spec.input_dim,
            "hidden_layers": list(model.spec.hidden_layers),
            "n_hypotheses": model.spec.n_hypotheses,
            "label_dim": model.spec.label_dim,
            "activation": model.spec.activation,
        },
        "metric": {"kind": model.metric.kind, "delta": model.metric.delta},
        "standardization": {
            "mean": model.x_mean.tolist(),
            "scale": model.x_scale.tolist(),
        },
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(model.params.weights, model.params.biases)
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                          encoding="utf-8")


def load_model(path) -> MhpModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "mhp-model":
        raise ValueError(f"{path} is not a hypothesis model file")
    spec = NetworkSpec(
        input_dim=int(payload["spec"]["input_dim"]),
        hidden_layers=tuple(payload["spec"]["hidden_layers"]),
        n_hypotheses=int(payload["spec"]["n_hypotheses"]),
        label_dim=int(payload["spec"]["label_dim"]),
        activation=payload["spec"]["activation"],
    )
    weights = [np.asarray(layer["weights"], dtype=np.float64) for layer in payload["layers"]]
    biases = [np.asarray(layer["bias"], dtype=np.float64) for layer in payload["layers"]]
    metric = WtaMetric(kind=payload["metric"]["kind"], delta=float(payload["metric"]["delta"]))
    return MhpModel(
        spec=spec,
        params=NetworkParams(spec, weights, biases),
        metric=metric,
        x_mean=np.asarray(payload["standardization"]["mean"], dtype=np.float64),
        x_scale=np.asarray(payload["standardization"]["scale"], dtype=np.float64),
    )
