"""Closed-form conditional expectations of network outputs under GBM.

Each hidden unit with log-price input pays ``max(w . log S + b, 0)``, a
geometric basket option; conditionally on the previous state ``w . log S``
is normal, so its expectation is the normal call-on-zero formula. Price-space
networks are supported for a single asset, where each unit is a forward,
a vanilla call, a vanilla put or worthless.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import kernels
from .errors import DimensionMismatch, InputSpaceMismatch
from .network import InputSpace

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SD_FLOOR = 1e-14


def relu_expectation_normal(mu, sd):
    """``E[max(Y, 0)]`` for ``Y ~ N(mu, sd^2)``; broadcasts over arrays."""
    mu = np.asarray(mu, dtype=np.float64)
    sd = np.asarray(sd, dtype=np.float64)
    if np.any(sd < 0):
        raise ValueError("sd must be non-negative")
    degenerate = sd < SD_FLOOR
    s = np.where(degenerate, 1.0, sd)
    z = mu / s
    val = s * _INV_SQRT_2PI * np.exp(-0.5 * z * z) + mu * ndtr(z)
    out = np.where(degenerate, np.maximum(mu, 0.0), val)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NormalMoments:
    """Mean of ``w . log S_next + b`` and variance of ``w . log S_next``."""

    mu_y: float | np.ndarray
    var_y: float

    @property
    def sd_y(self):
        return math.sqrt(max(self.var_y, 0.0))


def log_moments(model, s_prev, dt, w, b):
    """Conditional moments of a geometric basket leg over ``dt``.

    ``s_prev`` may be a single state or a matrix of states (one per row), in
    which case ``mu_y`` is a vector.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    w = np.asarray(w, dtype=np.float64).ravel()
    s_prev = np.asarray(s_prev, dtype=np.float64)
    if s_prev.shape[-1] != model.dim or w.shape[0] != model.dim:
        raise DimensionMismatch("state, weights and model dimensions differ")
    mean = np.log(s_prev) + model.drift * dt
    mu = mean @ w + b
    var = float(w @ model.covariance @ w) * dt
    return NormalMoments(float(mu) if np.ndim(mu) == 0 else mu, max(var, 0.0))


def basket_leg_expectation(model, s_prev, dt, w, b):
    """Undiscounted ``E[max(w . log S_next + b, 0) | S_prev]``."""
    mom = log_moments(model, s_prev, dt, w, b)
    return relu_expectation_normal(mom.mu_y, mom.sd_y)


def _as_rows(s_prev, d):
    s = np.asarray(s_prev, dtype=np.float64)
    single = s.ndim == 1
    s = s.reshape(1, -1) if single else s
    if s.shape[1] != d:
        raise DimensionMismatch(f"state dimension {s.shape[1]} vs network dimension {d}")
    return s, single


def leg_std(net, model, dt):
    """Standard deviation of ``w1_i . log S`` increments over ``dt``, per unit."""
    var = np.einsum("ij,jk,ik->i", net.w1, model.covariance, net.w1) * dt
    return np.sqrt(np.maximum(var, 0.0))


def expected_output_log(net, s_prev, model, dt):
    """Undiscounted ``E[G(log S_next) | S_prev]`` for a log-price network."""
    if net.input_space is not InputSpace.LOG_PRICE:
        raise InputSpaceMismatch("continuation_value needs a log-price network")
    s, single = _as_rows(s_prev, net.d)
    m = np.log(s) + model.drift * dt
    out = kernels.relu_expectation_sum(m, net.w1, net.b1, leg_std(net, model, dt), net.w2)
    out = out + net.b2
    return float(out[0]) if single else out


def continuation_value(net, s_prev, model, dt):
    """Discounted expected network output one period ahead.

    The discount applies to the whole portfolio, cash position included.
    """
    if net.input_space is not InputSpace.LOG_PRICE:
        raise InputSpaceMismatch("continuation_value needs a log-price network")
    return math.exp(-model.rate * dt) * expected_output_log(net, s_prev, model, dt)


class LegKind(str, enum.Enum):
    FORWARD = "Forward"
    CALL_LIKE = "CallLike"
    PUT_LIKE = "PutLike"
    WORTHLESS = "Worthless"


@dataclass(frozen=True)
class LegClassification:
    kind: LegKind
    strike: float | None = None


def classify_leg_1d(w, b):
    """Sign-pattern classification of the unit ``max(w s + b, 0)``, ``s > 0``."""
    if w > 0:
        if b >= 0:
            return LegClassification(LegKind.FORWARD)
        return LegClassification(LegKind.CALL_LIKE, -b / w)
    if w < 0:
        if b > 0:
            return LegClassification(LegKind.PUT_LIKE, -b / w)
        return LegClassification(LegKind.WORTHLESS)
    if b > 0:
        return LegClassification(LegKind.FORWARD)
    return LegClassification(LegKind.WORTHLESS)


def _bs_forward_call(fwd, strike, total_sd):
    """Undiscounted call ``E[(S_T - K)^+]`` with forward ``fwd``."""
    fwd = np.asarray(fwd, dtype=np.float64)
    if total_sd < SD_FLOOR:
        return np.maximum(fwd - strike, 0.0)
    d1 = (np.log(fwd / strike) + 0.5 * total_sd**2) / total_sd
    return fwd * ndtr(d1) - strike * ndtr(d1 - total_sd)


def _bs_forward_put(fwd, strike, total_sd):
    fwd = np.asarray(fwd, dtype=np.float64)
    if total_sd < SD_FLOOR:
        return np.maximum(strike - fwd, 0.0)
    d1 = (np.log(fwd / strike) + 0.5 * total_sd**2) / total_sd
    return strike * ndtr(-(d1 - total_sd)) - fwd * ndtr(-d1)


def price_leg_expectation_1d(w, b, s_prev, model, dt):
    """Undiscounted ``E[max(w S_next + b, 0) | S_prev]`` for one asset."""
    fwd = np.asarray(s_prev, dtype=np.float64) * math.exp((model.rate - model.dividend[0]) * dt)
    total_sd = float(model.vol[0]) * math.sqrt(dt)
    leg = classify_leg_1d(w, b)
    if leg.kind is LegKind.FORWARD:
        return w * fwd + b
    if leg.kind is LegKind.CALL_LIKE:
        return w * _bs_forward_call(fwd, leg.strike, total_sd)
    if leg.kind is LegKind.PUT_LIKE:
        return -w * _bs_forward_put(fwd, leg.strike, total_sd)
    return np.zeros_like(fwd)


def expected_output_price_1d(net, s_prev, model, dt):
    """Undiscounted ``E[G(S_next) | S_prev]`` for a single-asset price network."""
    if net.input_space is not InputSpace.PRICE:
        raise InputSpaceMismatch("expected a price-space network")
    if net.d != 1 or model.dim != 1:
        raise DimensionMismatch("price-space expectations are only available for d = 1")
    s, single = _as_rows(s_prev, 1)
    s = s[:, 0]
    out = np.full(s.shape[0], net.b2)
    for i in range(net.p):
        out += net.w2[i] * price_leg_expectation_1d(net.w1[i, 0], net.b1[i], s, model, dt)
    return float(out[0]) if single else out


def expected_output(net, s_prev, model, dt):
    """Undiscounted expected output, dispatching on the network's input space."""
    if net.input_space is InputSpace.LOG_PRICE:
        return expected_output_log(net, s_prev, model, dt)
    return expected_output_price_1d(net, s_prev, model, dt)


def discounted_expected_output(net, s_prev, model, dt):
    """Continuation value for either input space; ``dt = 0`` gives the payoff."""
    if dt == 0:
        s, single = _as_rows(s_prev, net.d)
        out = kernels.forward(net.transform(s), net.w1, net.b1, net.w2, net.b2)
        return float(out[0]) if single else out
    return math.exp(-model.rate * dt) * expected_output(net, s_prev, model, dt)


def bs_price(spot, strike, r, q, sigma, tau, is_call):
    """Black-Scholes price with continuous dividend yield; vectorized in ``spot``."""
    spot = np.asarray(spot, dtype=np.float64)
    if tau <= 0:
        out = np.maximum(spot - strike, 0.0) if is_call else np.maximum(strike - spot, 0.0)
        return float(out) if out.ndim == 0 else out
    fwd = spot * math.exp((r - q) * tau)
    total_sd = sigma * math.sqrt(tau)
    und = _bs_forward_call(fwd, strike, total_sd) if is_call else _bs_forward_put(fwd, strike, total_sd)
    out = math.exp(-r * tau) * und
    return float(out) if np.ndim(out) == 0 else out


def bs_delta(spot, strike, r, q, sigma, tau, is_call):
    spot = np.asarray(spot, dtype=np.float64)
    if tau <= 0:
        itm = spot > strike if is_call else spot < strike
        out = np.where(itm, 1.0 if is_call else -1.0, 0.0)
        return float(out) if out.ndim == 0 else out
    total_sd = sigma * math.sqrt(tau)
    if total_sd < SD_FLOOR:
        fwd = spot * math.exp((r - q) * tau)
        itm = fwd > strike if is_call else fwd < strike
        out = math.exp(-q * tau) * np.where(itm, 1.0 if is_call else -1.0, 0.0)
        return float(out) if out.ndim == 0 else out
    d1 = (np.log(spot / strike) + (r - q + 0.5 * sigma**2) * tau) / total_sd
    disc_q = math.exp(-q * tau)
    out = disc_q * ndtr(d1) if is_call else -disc_q * ndtr(-d1)
    return float(out) if np.ndim(out) == 0 else out
