"""Desk-scale supervised models over flat parameter vectors.

Two model kinds are supported, both trained with mean cross-entropy:

* ``softmax``: multinomial logistic regression, parameters ``[W (K x D), b (K)]``.
* ``mlp``: one hidden tanh layer, parameters ``[W1 (H x D), b1 (H), W2 (K x H), b2 (K)]``.

All parameter vectors are 1-D float64 numpy arrays. Functions never mutate
their inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError

MODEL_KINDS = ("softmax", "mlp")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "softmax"
    input_dim: int = 16
    hidden_dim: int = 0
    num_classes: int = 10

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.input_dim < 1 or self.num_classes < 2:
            raise ConfigError("model needs input_dim >= 1 and num_classes >= 2")
        if self.kind == "mlp" and self.hidden_dim < 1:
            raise ConfigError("mlp model needs hidden_dim >= 1")
        if self.kind == "softmax" and self.hidden_dim != 0:
            raise ConfigError("softmax model must have hidden_dim == 0")

    @property
    def num_params(self) -> int:
        d, h, k = self.input_dim, self.hidden_dim, self.num_classes
        if self.kind == "softmax":
            return k * d + k
        return h * d + h + k * h + k


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 10
    batches: int = 10
    epochs: int = 1

    def __post_init__(self):
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ConfigError("learning_rate must be finite and >= 0")
        if self.batch_size < 1 or self.batches < 1 or self.epochs < 0:
            raise ConfigError("batch_size and batches must be >= 1, epochs >= 0")

    @property
    def local_updates(self) -> int:
        """Number of SGD steps per local training call (batches x epochs)."""
        return self.batches * self.epochs


@dataclass(frozen=True, eq=False)
class DatasetShard:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ShapeError(f"features {x.shape} and labels {y.shape} do not line up")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, idx) -> "DatasetShard":
        return DatasetShard(self.features[idx], self.labels[idx])


def ensure_finite(w: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("parameter vector contains NaN or Inf")
    return w


def init_params(spec: ModelSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Genesis parameters: zeros for softmax, uniform(+-1/sqrt(fan_in)) weights for the MLP."""
    if spec.kind == "softmax":
        return np.zeros(spec.num_params)
    if rng is None:
        raise ValueError("mlp initialisation needs an rng")
    d, h, k = spec.input_dim, spec.hidden_dim, spec.num_classes
    b1, b2 = 1.0 / math.sqrt(d), 1.0 / math.sqrt(h)
    return np.concatenate([
        rng.uniform(-b1, b1, h * d),
        np.zeros(h),
        rng.uniform(-b2, b2, k * h),
        np.zeros(k),
    ])


def _unpack(spec: ModelSpec, w: np.ndarray):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (spec.num_params,):
        raise ShapeError(f"expected {spec.num_params} parameters, got shape {w.shape}")
    d, h, k = spec.input_dim, spec.hidden_dim, spec.num_classes
    if spec.kind == "softmax":
        return w[: k * d].reshape(k, d), w[k * d:]
    i = 0
    W1 = w[i:i + h * d].reshape(h, d); i += h * d
    b1 = w[i:i + h]; i += h
    W2 = w[i:i + k * h].reshape(k, h); i += k * h
    b2 = w[i:i + k]
    return W1, b1, W2, b2


def _check_data(spec: ModelSpec, shard: DatasetShard):
    if shard.features.shape[1] != spec.input_dim:
        raise ShapeError(
            f"data has {shard.features.shape[1]} features, model expects {spec.input_dim}")


def logits(spec: ModelSpec, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    parts = _unpack(spec, w)
    if spec.kind == "softmax":
        W, b = parts
        return x @ W.T + b
    W1, b1, W2, b2 = parts
    return np.tanh(x @ W1.T + b1) @ W2.T + b2


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss(spec: ModelSpec, w: np.ndarray, shard: DatasetShard) -> float:
    """Mean cross-entropy of the model on ``shard``."""
    _check_data(spec, shard)
    logp = _log_softmax(logits(spec, w, shard.features))
    return float(-logp[np.arange(shard.n), shard.labels].mean())


def predict(spec: ModelSpec, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(logits(spec, w, x), axis=1)


def accuracy(spec: ModelSpec, w: np.ndarray, shard: DatasetShard) -> float:
    _check_data(spec, shard)
    return float(np.mean(predict(spec, w, shard.features) == shard.labels))


def gradient(spec: ModelSpec, w: np.ndarray, batch: DatasetShard) -> np.ndarray:
    """Analytic gradient of the mean cross-entropy over ``batch``."""
    if batch.n == 0:
        raise ValueError("gradient of an empty batch is undefined")
    _check_data(spec, batch)
    x, n = batch.features, batch.n
    parts = _unpack(spec, w)
    if spec.kind == "softmax":
        W, b = parts
        z = x @ W.T + b
        p = np.exp(_log_softmax(z))
        p[np.arange(n), batch.labels] -= 1.0
        p /= n
        return np.concatenate([(p.T @ x).ravel(), p.sum(axis=0)])

    W1, b1, W2, b2 = parts
    a = np.tanh(x @ W1.T + b1)
    p = np.exp(_log_softmax(a @ W2.T + b2))
    p[np.arange(n), batch.labels] -= 1.0
    p /= n
    gW2 = p.T @ a
    gb2 = p.sum(axis=0)
    da = (p @ W2) * (1.0 - a * a)
    gW1 = da.T @ x
    gb1 = da.sum(axis=0)
    return np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])


def _batch_indices(n: int, cfg: TrainConfig, rng: np.random.Generator):
    """Yield index arrays for every local update.

    Each epoch walks a fresh permutation of the shard; when an epoch needs more
    samples than the shard holds, further permutations are appended.
    """
    if n < cfg.batch_size:
        for _ in range(cfg.local_updates):
            yield rng.integers(0, n, cfg.batch_size)
        return
    need = cfg.batches * cfg.batch_size
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        while order.shape[0] < need:
            order = np.concatenate([order, rng.permutation(n)])
        for k in range(cfg.batches):
            yield order[k * cfg.batch_size:(k + 1) * cfg.batch_size]


def local_train(spec: ModelSpec, w_avg: np.ndarray, shard: DatasetShard,
                cfg: TrainConfig, rng: np.random.Generator) -> np.ndarray:
    """Run ``cfg.local_updates`` minibatch SGD steps starting from ``w_avg``."""
    _check_data(spec, shard)
    w = np.array(w_avg, dtype=np.float64, copy=True)
    for idx in _batch_indices(shard.n, cfg, rng):
        w -= cfg.learning_rate * gradient(spec, w, shard.subset(idx))
    return ensure_finite(w)


def average(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ShapeError(f"cannot average shapes {w1.shape} and {w2.shape}")
    return ensure_finite((w1 + w2) / 2.0)
