"""Intrinsic values for the supported claims and barrier survival state."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import MissingField


class PayoffKind(str, enum.Enum):
    VANILLA_PUT = "VanillaPut"
    VANILLA_CALL = "VanillaCall"
    ARITHMETIC_BASKET_PUT = "ArithmeticBasketPut"
    MAX_CALL = "MaxCall"
    DOWN_OUT_CALL = "DownOutCall"


@dataclass(frozen=True)
class PayoffSpec:
    kind: PayoffKind
    strike: float
    basket_weights: tuple | None = None
    barrier: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        if not self.strike > 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if self.basket_weights is not None:
            object.__setattr__(self, "basket_weights", tuple(float(w) for w in self.basket_weights))

    @property
    def exercisable(self):
        """Whether the holder may exercise at intermediate monitoring dates."""
        return self.kind is not PayoffKind.DOWN_OUT_CALL

    def validate(self):
        if self.kind is PayoffKind.ARITHMETIC_BASKET_PUT and self.basket_weights is None:
            raise MissingField("ArithmeticBasketPut requires basket_weights")
        if self.kind is PayoffKind.DOWN_OUT_CALL and self.barrier is None:
            raise MissingField("DownOutCall requires barrier")
        return self

    def scaled(self, scale):
        """Strike and barrier divided by ``scale`` (prices normalized by it)."""
        barrier = None if self.barrier is None else self.barrier / scale
        return replace(self, strike=self.strike / scale, barrier=barrier)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "strike": self.strike,
            "basket_weights": None if self.basket_weights is None else list(self.basket_weights),
            "barrier": self.barrier,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], data["strike"], data.get("basket_weights"), data.get("barrier"))


def intrinsic_batch(spec, s):
    """Unclamped intrinsic value ``h`` over the last axis of ``s``.

    For the down-and-out call this ignores survival; see ``update_survival``.
    """
    spec.validate()
    s = np.asarray(s, dtype=np.float64)
    k = spec.strike
    kind = spec.kind
    if kind is PayoffKind.VANILLA_PUT:
        return k - s[..., 0]
    if kind in (PayoffKind.VANILLA_CALL, PayoffKind.DOWN_OUT_CALL):
        return s[..., 0] - k
    if kind is PayoffKind.ARITHMETIC_BASKET_PUT:
        w = np.asarray(spec.basket_weights)
        if w.shape[0] != s.shape[-1]:
            raise MissingField(f"basket_weights has {w.shape[0]} entries for {s.shape[-1]} assets")
        return k - s @ w
    if kind is PayoffKind.MAX_CALL:
        return s.max(axis=-1) - k
    raise ValueError(f"unknown payoff kind {kind}")


def intrinsic(spec, s):
    """Intrinsic value ``h(s)`` for a single state vector."""
    return float(intrinsic_batch(spec, np.atleast_1d(s)))


@dataclass(frozen=True)
class SurvivalState:
    alive: np.ndarray

    @classmethod
    def fresh(cls, n_paths):
        return cls(np.ones(n_paths, dtype=bool))


def update_survival(state, s, spec):
    """Knock out paths whose first asset is at or below the barrier."""
    if spec.kind is not PayoffKind.DOWN_OUT_CALL:
        raise ValueError("survival only applies to DownOutCall")
    spec.validate()
    s = np.asarray(s, dtype=np.float64)
    above = s[..., 0] > spec.barrier
    return SurvivalState(np.logical_and(state.alive, above))


def survival_matrix(spec, values):
    """Alive flags after the check at each date, shape ``(N, M + 1)``.

    ``t_0`` is not a monitoring date, so column 0 is all True. Other claims
    are always alive.
    """
    n, m1 = values.shape[0], values.shape[1]
    alive = np.ones((n, m1), dtype=bool)
    if spec.kind is not PayoffKind.DOWN_OUT_CALL:
        return alive
    state = SurvivalState.fresh(n)
    for m in range(1, m1):
        state = update_survival(state, values[:, m], spec)
        alive[:, m] = state.alive
    return alive
