"""Shallow ReLU regression network, its gradient and the Adam training loop."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch


class InputSpace(str, enum.Enum):
    LOG_PRICE = "LogPrice"
    PRICE = "Price"


@dataclass(frozen=True)
class ShallowNet:
    """``x -> sum_i w2_i max(w1_i . x + b1_i, 0) + b2``.

    ``w1`` has shape ``(p, d)``. When ``input_space`` is LOG_PRICE the caller
    passes elementwise log prices.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    input_space: InputSpace = InputSpace.LOG_PRICE

    def __post_init__(self):
        w1 = np.array(self.w1, dtype=np.float64, ndmin=2)
        b1 = np.array(self.b1, dtype=np.float64).ravel()
        w2 = np.array(self.w2, dtype=np.float64).ravel()
        if b1.shape[0] != w1.shape[0] or w2.shape[0] != w1.shape[0]:
            raise DimensionMismatch(
                f"inconsistent hidden sizes: w1 {w1.shape}, b1 {b1.shape}, w2 {w2.shape}"
            )
        for a in (w1, b1, w2):
            a.flags.writeable = False
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "input_space", InputSpace(self.input_space))

    @property
    def p(self):
        return self.w1.shape[0]

    @property
    def d(self):
        return self.w1.shape[1]

    @property
    def n_params(self):
        return 1 + 2 * self.p + self.p * self.d

    def transform(self, s):
        """Map prices to this network's input space."""
        s = np.asarray(s, dtype=np.float64)
        return np.log(s) if self.input_space is InputSpace.LOG_PRICE else s

    def flat(self):
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def with_flat(self, theta):
        p, d = self.p, self.d
        w1 = theta[: p * d].reshape(p, d)
        b1 = theta[p * d: p * d + p]
        w2 = theta[p * d + p: p * d + 2 * p]
        return ShallowNet(w1, b1, w2, theta[-1], self.input_space)

    def to_dict(self):
        return {
            "p": self.p,
            "d": self.d,
            "input_space": self.input_space.value,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
        }

    def to_json(self):
        # repr round-trips doubles exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        net = cls(
            np.array(data["w1"], dtype=np.float64).reshape(data["p"], data["d"]),
            data["b1"], data["w2"], data["b2"], data["input_space"],
        )
        return net

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def forward(net, x):
    """Network output at one input vector or at each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xm = x.reshape(1, -1) if single else x
    if xm.shape[1] != net.d:
        raise DimensionMismatch(f"input has dimension {xm.shape[1]}, network expects {net.d}")
    out = kernels.forward(xm, net.w1, net.b1, net.w2, net.b2)
    return float(out[0]) if single else out


def gradient(net, x, y):
    """MSE and its gradient as a flat vector ordered like ``ShallowNet.flat``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.d:
        raise DimensionMismatch(f"batch shape {x.shape} incompatible with d={net.d}")
    loss, gw1, gb1, gw2, gb2 = kernels.mse_grad(x, np.asarray(y, dtype=np.float64),
                                                net.w1, net.b1, net.w2, net.b2)
    return loss, np.concatenate([gw1.ravel(), gb1, gw2, [gb2]])


def mse(net, x, y):
    r = forward(net, x) - y
    return float(r @ r) / r.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_fraction: float = 0.1
    patience: int = 6
    split: float = 0.7
    max_epochs: int = 3000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch_fraction must lie in (0, 1]")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class FitReport:
    train_mse: float
    val_mse: float
    epochs: int
    early_stopped: bool
    degenerate: bool = False

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state, cfg):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grads
    v = b2 * state.v + (1.0 - b2) * grads * grads
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    new = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return new, AdamState(m, v, t)


def init_net(d, p, seed, input_space=InputSpace.LOG_PRICE, anchors=None):
    """Glorot-uniform weights with hidden biases placing the ReLU kinks.

    With ``anchors`` (sample inputs, one per row) each unit's hyperplane
    passes through a randomly drawn anchor, so every kink starts inside the
    data. Without anchors the hidden biases are uniform on [-1, 1].
    """
    rng = np.random.default_rng(seed)
    lim1 = math.sqrt(6.0 / (d + p))
    lim2 = math.sqrt(6.0 / (p + 1))
    w1 = rng.uniform(-lim1, lim1, size=(p, d))
    if anchors is None:
        b1 = rng.uniform(-1.0, 1.0, size=p)
    else:
        anchors = np.asarray(anchors, dtype=np.float64).reshape(-1, d)
        pick = anchors[rng.integers(0, anchors.shape[0], size=p)]
        b1 = -np.einsum("ij,ij->i", w1, pick)
    w2 = rng.uniform(-lim2, lim2, size=p)
    return ShallowNet(w1, b1, w2, 0.0, input_space)


def warm_start(net):
    """Copy of ``net`` to initialize the fit at the previous date."""
    return ShallowNet(net.w1.copy(), net.b1.copy(), net.w2.copy(), net.b2, net.input_space)


def fit(initial, inputs, targets, cfg=None, seed=0):
    """Mini-batch Adam on the mean squared error with validation early stopping.

    The data are split once (``cfg.split`` for training) and mini-batches are
    reshuffled every epoch, all driven by ``seed``. Returns the weights with
    the best validation error seen, the initial weights included.
    """
    cfg = cfg or TrainConfig()
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    y = np.ascontiguousarray(targets, dtype=np.float64).ravel()
    n = x.shape[0]
    if x.ndim != 2 or x.shape[1] != initial.d or y.shape[0] != n:
        raise DimensionMismatch(f"inputs {x.shape} / targets {y.shape} vs d={initial.d}")
    if n < 10:
        raise ValueError(f"need at least 10 training points, got {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")

    if np.all(y == y[0]):
        net = ShallowNet(initial.w1, initial.b1, np.zeros(initial.p), y[0], initial.input_space)
        return net, FitReport(0.0, 0.0, 0, False, degenerate=True)

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = min(n - 1, max(1, int(round(cfg.split * n))))
    tr, va = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    x_tr, y_tr, x_va, y_va = x[tr], y[tr], x[va], y[va]
    batch = max(1, int(round(cfg.batch_fraction * n)))

    theta = initial.flat()
    state = AdamState.zeros(theta.shape[0])
    best_theta = theta.copy()
    best_val = mse(initial, x_va, y_va)
    wait = 0
    epochs = 0
    stopped = False
    net = initial
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n_train)
        for s in range(0, n_train, batch):
            idx = order[s:s + batch]
            _, g = gradient(net, x_tr[idx], y_tr[idx])
            theta, state = adam_step(theta, g, state, cfg)
            net = initial.with_flat(theta)
        epochs = epoch + 1
        val = mse(net, x_va, y_va)
        if val < best_val:
            best_val, best_theta, wait = val, theta.copy(), 0
        else:
            wait += 1
            if wait >= cfg.patience:
                stopped = True
                break
    best = initial.with_flat(best_theta)
    return best, FitReport(mse(best, x_tr, y_tr), best_val, epochs, stopped)
