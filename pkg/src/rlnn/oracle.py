"""Independent reference prices: a CRR binomial tree and plain Monte Carlo."""
from __future__ import annotations

import math

import numpy as np

from .errors import ScheduleMisaligned


def exercise_layers(times, steps):
    """Tree layer index for each exercise date in ``times`` (``t_0`` included)."""
    times = np.asarray(times, dtype=np.float64)
    maturity = times[-1]
    if steps < times.shape[0] - 1:
        raise ValueError(f"need at least {times.shape[0] - 1} steps, got {steps}")
    dt = maturity / steps
    layers = np.rint(times / dt).astype(int)
    off = np.abs(layers * dt - times)
    if np.any(off > 0.5 * dt * (1 + 1e-9)) or np.any(np.diff(layers) <= 0):
        raise ScheduleMisaligned(f"dates {times.tolist()} do not map to distinct layers of a {steps}-step tree")
    return layers


def binomial_bermudan_1d(s0, strike, r, q, sigma, times, steps, is_put=True, european=False):
    """CRR tree price with exercise allowed only at the layers nearest ``times``.

    ``times`` is the full schedule ``[0, t_1, ..., T]``; exercise at ``t_0``
    is allowed too. With ``european`` only the terminal payoff counts.
    """
    times = np.asarray(times, dtype=np.float64)
    maturity = float(times[-1])
    dt = maturity / steps
    layers = exercise_layers(times, steps)
    exercise_at = set(layers.tolist()) if not european else {steps}
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    growth = math.exp((r - q) * dt)
    if u - d < 1e-300 or sigma * math.sqrt(dt) < 1e-12:
        return _deterministic(s0, strike, r, q, times, is_put, european)
    pu = (growth - d) / (u - d)
    if not 0.0 <= pu <= 1.0:
        raise ValueError(f"risk-neutral probability {pu} outside [0, 1]; increase steps")
    disc = math.exp(-r * dt)

    def intrinsic(k):
        s = s0 * u ** (k - np.arange(k + 1)) * d ** np.arange(k + 1)
        return np.maximum(strike - s, 0.0) if is_put else np.maximum(s - strike, 0.0)

    value = intrinsic(steps)
    for k in range(steps - 1, -1, -1):
        value = disc * (pu * value[:-1] + (1.0 - pu) * value[1:])
        if k in exercise_at:
            np.maximum(value, intrinsic(k), out=value)
    return float(value[0])


def _deterministic(s0, strike, r, q, times, is_put, european):
    dates = times[-1:] if european else times
    fwd = s0 * np.exp((r - q) * dates)
    pay = np.maximum(strike - fwd, 0.0) if is_put else np.maximum(fwd - strike, 0.0)
    return float(np.max(np.exp(-r * dates) * pay))


def mc_expectation(fn, sampler, n, seed, batch=1_000_000):
    """Monte Carlo mean of ``fn(sampler(rng, k))`` and its standard error."""
    rng = np.random.default_rng(seed)
    total, total_sq, count = 0.0, 0.0, 0
    while count < n:
        k = min(batch, n - count)
        vals = np.asarray(fn(sampler(rng, k)), dtype=np.float64)
        total += float(vals.sum())
        total_sq += float(vals @ vals)
        count += k
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return mean, math.sqrt(var / count)
