"""Training configuration and optimizer steppers shared by the trainers."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .metrics import WtaMetric

OPTIMIZERS = ("adam", "sgd")


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch training settings.

    ``epsilon`` is the initial gradient relaxation; it anneals linearly to
    zero at the halfway epoch and stays zero afterwards, so the optimized
    objective ends as the plain winner-takes-all loss.  The learning rate
    decays by ``lr_decay`` every ``lr_decay_every`` epochs.
    """

    metric: WtaMetric | None = None
    epsilon: float = 0.05
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 256
    epochs: int = 50
    lr_decay: float = 1.0
    lr_decay_every: int = 25
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError(f"lr_decay must lie in (0, 1], got {self.lr_decay}")
        if self.lr_decay_every < 1:
            raise ValueError(f"lr_decay_every must be >= 1, got {self.lr_decay_every}")

    def with_metric(self, metric: WtaMetric) -> "TrainConfig":
        return replace(self, metric=metric)


def epsilon_at(cfg: TrainConfig, epoch: int) -> float:
    half = cfg.epochs // 2
    if epoch >= half or half == 0:
        return 0.0
    return cfg.epsilon * (1.0 - epoch / half)


def learning_rate_at(cfg: TrainConfig, epoch: int) -> float:
    return cfg.learning_rate * cfg.lr_decay ** (epoch // cfg.lr_decay_every)


class SgdStepper:
    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        for a, g in zip(arrays, grads):
            a -= lr * g


class AdamStepper:
    def __init__(self, arrays: list[np.ndarray], beta1: float, beta2: float, eps: float):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (a, g) in enumerate(zip(arrays, grads)):
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            m_hat = self.m[i] / (1.0 - b1 ** self.t)
            v_hat = self.v[i] / (1.0 - b2 ** self.t)
            a -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_stepper(cfg: TrainConfig, arrays: list[np.ndarray]):
    if cfg.optimizer == "sgd":
        return SgdStepper()
    return AdamStepper(arrays, cfg.beta1, cfg.beta2, cfg.adam_epsilon)
