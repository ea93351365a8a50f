"""Scikit-learn style estimators wrapping the quantizer and the network."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .metrics import WtaMetric, default_delta, metric_distances, nearest_indices
from .network import NetworkSpec, fit_mhp, load_model, save_model
from .optim import TrainConfig
from .quantizer import fit_hypotheses, lloyd_refine
from .validation import as_points
from .wta import batch_wta

_METRIC_KINDS = ("l2", "ldp")


def _build_metric(kind: str, delta, data: np.ndarray) -> WtaMetric:
    if kind not in _METRIC_KINDS:
        raise ValueError(f"metric must be one of {_METRIC_KINDS}, got {kind!r}")
    if kind == "l2":
        return WtaMetric.l2()
    return WtaMetric.ldp(default_delta(data) if delta is None else float(delta))


class HypothesisQuantizer(BaseEstimator):
    """Summarize a sample set with ``n_hypotheses`` representative points.

    Fitting minimizes the mean winner-takes-all loss over the samples by
    mini-batch gradient descent, starting from distinct random samples.
    With ``metric="l2"`` this behaves like a stochastic k-means quantizer
    whose point density flattens the data density; with ``metric="ldp"``
    the points follow the data density itself and their cells approach
    equal data shares.

    Parameters
    ----------
    n_hypotheses : int
        Number of representative points.
    metric : {"ldp", "l2"}
        Distance inside the winner-takes-all loss.
    delta : float or None
        Log-distance offset; None scales it from the data diameter.
    learning_rate, epochs, batch_size, epsilon, lr_decay, lr_decay_every
        Mini-batch schedule; epsilon is the gradient relaxation, annealed
        to zero at the halfway epoch.
    refine_iterations : int
        Optional batch alternation sweeps run after gradient descent.
    seed : int
        Root of all random streams used while fitting.

    Attributes
    ----------
    hypotheses_ : ndarray of shape (n_hypotheses, n_features)
    metric_ : WtaMetric
        The resolved metric, including the delta actually used.
    """

    def __init__(self, n_hypotheses=150, metric="ldp", delta=None, learning_rate=1e-2,
                 epochs=100, batch_size=256, epsilon=0.05, lr_decay=0.5,
                 lr_decay_every=25, refine_iterations=0, seed=0):
        self.n_hypotheses = n_hypotheses
        self.metric = metric
        self.delta = delta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.epsilon = epsilon
        self.lr_decay = lr_decay
        self.lr_decay_every = lr_decay_every
        self.refine_iterations = refine_iterations
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            epsilon=self.epsilon,
            lr_decay=self.lr_decay,
            lr_decay_every=self.lr_decay_every,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        X = as_points(X, name="X")
        metric = _build_metric(self.metric, self.delta, X)
        hyps = fit_hypotheses(X, self.n_hypotheses, metric, self._config())
        if self.refine_iterations:
            hyps = lloyd_refine(X, hyps, metric, self.refine_iterations)
        self.metric_ = metric
        self.hypotheses_ = hyps
        return self

    def predict(self, X):
        """Index of the nearest hypothesis for each sample."""
        check_is_fitted(self, "hypotheses_")
        X = as_points(X, dim=self.hypotheses_.shape[1], name="X")
        return nearest_indices(X, self.hypotheses_)

    def transform(self, X):
        """Euclidean distance from each sample to every hypothesis."""
        check_is_fitted(self, "hypotheses_")
        X = as_points(X, dim=self.hypotheses_.shape[1], name="X")
        diffs = X[:, None, :] - self.hypotheses_[None, :, :]
        return np.sqrt(np.einsum("bki,bki->bk", diffs, diffs))

    def score(self, X, y=None):
        """Negative mean winner-takes-all loss (higher is better)."""
        check_is_fitted(self, "hypotheses_")
        X = as_points(X, dim=self.hypotheses_.shape[1], name="X")
        return -float(np.mean([metric_distances(self.metric_, self.hypotheses_, row).min()
                               for row in X]))


class MhpRegressor(BaseEstimator):
    """Regressor that predicts ``n_hypotheses`` candidate labels per input.

    A small fully connected network maps each feature vector to a set of
    hypotheses; training backpropagates the winner-takes-all loss, so only
    the hypothesis closest to the observed label (plus an annealed
    relaxation share) receives gradient.  With ``metric="ldp"`` the
    per-input hypothesis sets track the conditional label density, which
    makes them directly usable as particles in sampling-based pipelines.

    Parameters
    ----------
    n_hypotheses : int
    hidden_layers : tuple of int
    activation : {"tanh", "relu"}
    metric : {"ldp", "l2"}
    delta : float or None
        Log-distance offset; None scales it from the label diameter.
    learning_rate, optimizer, batch_size, epochs, epsilon, lr_decay, lr_decay_every
        Training schedule, see TrainConfig.
    seed : int

    Attributes
    ----------
    model_ : MhpModel
        Trained network, input standardization and resolved metric.
    loss_history_ : list of float
        Per-epoch mean winner loss.
    alive_history_ : list of int
        Per-epoch count of hypotheses that won at least one sample.
    """

    def __init__(self, n_hypotheses=20, hidden_layers=(64, 64), activation="tanh",
                 metric="ldp", delta=None, learning_rate=1e-3, optimizer="adam",
                 batch_size=256, epochs=50, epsilon=0.05, lr_decay=1.0,
                 lr_decay_every=25, seed=0):
        self.n_hypotheses = n_hypotheses
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.metric = metric
        self.delta = delta
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.batch_size = batch_size
        self.epochs = epochs
        self.epsilon = epsilon
        self.lr_decay = lr_decay
        self.lr_decay_every = lr_decay_every
        self.seed = seed

    def fit(self, X, y):
        X = as_points(X, name="X")
        y = as_points(y, name="y")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        metric = _build_metric(self.metric, self.delta, y)
        spec = NetworkSpec(
            input_dim=X.shape[1],
            hidden_layers=tuple(self.hidden_layers),
            n_hypotheses=self.n_hypotheses,
            label_dim=y.shape[1],
            activation=self.activation,
        )
        cfg = TrainConfig(
            metric=metric,
            epsilon=self.epsilon,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lr_decay=self.lr_decay,
            lr_decay_every=self.lr_decay_every,
            seed=self.seed,
        )
        self.model_, result = fit_mhp(X, y, spec, cfg)
        self.loss_history_ = result.loss_history
        self.alive_history_ = result.alive_history
        return self

    def predict(self, X):
        """Hypothesis sets of shape (n_samples, n_hypotheses, label_dim)."""
        check_is_fitted(self, "model_")
        return self.model_.predict(X)

    def score(self, X, y):
        """Negative mean winner-takes-all loss on (X, y) (higher is better)."""
        check_is_fitted(self, "model_")
        y = as_points(y, dim=self.model_.spec.label_dim, name="y")
        hyp_sets = self.model_.predict(X)
        res = batch_wta(hyp_sets, y, self.model_.metric, 0.0)
        return -float(res.losses.mean())

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        save_model(self.model_, path)

    @classmethod
    def load(cls, path) -> "MhpRegressor":
        """Rebuild a fitted regressor from a model file."""
        model = load_model(path)
        est = cls(
            n_hypotheses=model.spec.n_hypotheses,
            hidden_layers=model.spec.hidden_layers,
            activation=model.spec.activation,
            metric=model.metric.kind,
            delta=model.metric.delta,
        )
        est.model_ = model
        est.loss_history_ = []
        est.alive_history_ = []
        return est
