"""Lower bound from the learned exercise policy and the dual upper bound.

The martingale used for the upper bound is built from the same networks: its
increment over ``[t_i, t_{i+1}]`` is the discounted network output at
``t_{i+1}`` minus the discounted closed-form continuation value at ``t_i``,
so no nested simulation is needed.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .market import simulate_paths
from .payoff import intrinsic_batch, survival_matrix
from .pricer import exercise_decision

EVAL_SALT = 0x9E3779B97F4A7C15


def eval_seed(seed):
    """Seed for fresh evaluation paths, distinct from the training stream."""
    return (int(seed) ^ EVAL_SALT) & 0xFFFFFFFFFFFFFFFF


@dataclass
class BoundReport:
    lower: float
    lower_se: float
    upper: float
    upper_se: float
    n_paths: int
    direct: float = float("nan")

    @property
    def ci95(self):
        return (self.lower - 1.96 * self.lower_se, self.upper + 1.96 * self.upper_se)

    @property
    def gap(self):
        return self.upper - self.lower

    def row(self, instrument="", s0=float("nan"), hidden=0, seed=0):
        return {
            "instrument": instrument, "S0": s0, "p": hidden, "seed": seed,
            "direct": self.direct, "lower": self.lower, "lower_se": self.lower_se,
            "upper": self.upper, "upper_se": self.upper_se,
        }


ROW_FIELDS = ["instrument", "S0", "p", "seed", "direct", "lower", "lower_se", "upper", "upper_se"]


def rows_to_csv(rows, digits=6):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else ROW_FIELDS,
                            lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.{digits}g}" if isinstance(v, float) else v)
                         for k, v in row.items()})
    return buf.getvalue()


def rows_to_json(rows):
    return json.dumps(rows, indent=1, default=_json_float)


def _json_float(v):
    return float(f"{v:.17g}")


@dataclass
class _Evaluation:
    """Per-path quantities on a fresh path set, all in normalized units."""

    disc: np.ndarray      # (M+1,) discount factors e^{-r t_m}
    h: np.ndarray         # (N, M+1) clamped exercise values, 0 where not exercisable
    q: np.ndarray         # (N, M) continuation values at t_0..t_{M-1}
    g: np.ndarray         # (N, M+1) network outputs at t_1..t_M, column 0 unused
    alive: np.ndarray     # (N, M+1)


def _evaluate(result, values):
    nmodel = result.normalized_model()
    nspec = result.normalized_spec()
    times = result.schedule.times
    big_m = result.schedule.n_dates
    n = values.shape[0]
    alive = survival_matrix(nspec, values)
    h = np.maximum(intrinsic_batch(nspec, values), 0.0)
    if not nspec.exercisable:
        h[:, :big_m] = 0.0
    h *= alive
    q = np.zeros((n, big_m))
    g = np.zeros((n, big_m + 1))
    for m in range(big_m):
        live = alive[:, m]
        q[live, m] = result.continuation(m, values[live, m])
        net = result.nets[m + 1]
        g[:, m + 1] = kernels.forward(net.transform(values[:, m + 1]),
                                      net.w1, net.b1, net.w2, net.b2)
    disc = np.exp(-nmodel.rate * times)
    return _Evaluation(disc, h, q, g, alive)


def _martingale(ev):
    n, big_m1 = ev.h.shape
    mart = np.zeros((n, big_m1))
    for i in range(big_m1 - 1):
        inc = ev.disc[i + 1] * ev.g[:, i + 1] - ev.disc[i] * ev.q[:, i]
        mart[:, i + 1] = mart[:, i] + inc * ev.alive[:, i]
    return mart


def _lower_samples(result, ev):
    n, big_m1 = ev.h.shape
    big_m = big_m1 - 1
    payoff = ev.disc[big_m] * ev.h[:, big_m]
    stopped = np.zeros(n, dtype=bool)
    if result.spec.exercisable:
        for m in range(big_m):
            hm = ev.h[:, m]
            ex = ~stopped & (hm > 0.0) & exercise_decision(hm, ev.q[:, m])
            payoff = np.where(ex, ev.disc[m] * hm, payoff)
            stopped |= ex
    return payoff


def _upper_samples(ev):
    mart = _martingale(ev)
    return np.max(ev.disc[None, :] * ev.h - mart, axis=1)


def _fresh_values(result, n_eval, seed):
    paths = simulate_paths(result.normalized_model(), result.schedule, n_eval, eval_seed(seed))
    return paths.values


def _mean_se(x):
    n = x.shape[0]
    se = float(np.std(x, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return float(np.mean(x)), se


def lower_bound(result, n_eval=200000, seed=1):
    """Discounted payoff of the learned stopping rule on fresh paths.

    Returns ``(estimate, standard_error)`` in currency units.
    """
    ev = _evaluate(result, _fresh_values(result, n_eval, seed))
    mean, se = _mean_se(_lower_samples(result, ev))
    return result.scale * mean, result.scale * se


def upper_bound(result, n_eval=200000, seed=1):
    """Dual upper bound ``E[max_t (disc h_t - M_t)]`` on fresh paths."""
    ev = _evaluate(result, _fresh_values(result, n_eval, seed))
    mean, se = _mean_se(_upper_samples(ev))
    return result.scale * mean, result.scale * se


def dual_martingale(result, values):
    """Martingale values ``M_{t_0..t_M}`` for each row of a ``(N, M+1, d)`` array.

    ``values`` are prices in currency units; the martingale is returned in
    currency units too.
    """
    values = np.asarray(values, dtype=np.float64) / result.scale
    return result.scale * _martingale(_evaluate(result, values))


def dual_martingale_path(result, path):
    """Martingale along a single ``(M+1, d)`` price path."""
    return dual_martingale(result, np.asarray(path)[None, :, :])[0]


def evaluate_bounds(result, n_eval=200000, seed=1):
    """Both bounds on one fresh path set, so their difference is estimated tightly."""
    ev = _evaluate(result, _fresh_values(result, n_eval, seed))
    lo, lo_se = _mean_se(_lower_samples(result, ev))
    up, up_se = _mean_se(_upper_samples(ev))
    c = result.scale
    return BoundReport(c * lo, c * lo_se, c * up, c * up_se, n_eval, result.direct_estimate)


def cross_run_summary(values):
    """Mean and standard error across independent runs."""
    arr = np.asarray(values, dtype=np.float64)
    return _mean_se(arr)
