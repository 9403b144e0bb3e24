"""Semi-static hedge portfolios read off trained networks, and hedge backtests.

Each hidden unit of a network maturing at ``t_m`` is an option paying
``max(w . x + b, 0)`` at ``t_m`` (``x`` the log prices or prices), held in
quantity ``w2``; the output bias is cash paid at ``t_m``. Losses use the
writer's sign convention: ``loss = target value - hedge value``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import analytic
from .errors import DimensionMismatch, StalePortfolio
from .market import ExerciseSchedule, simulate_paths
from .network import InputSpace, ShallowNet, TrainConfig, fit, init_net
from .payoff import intrinsic_batch

_TIME_TOL = 1e-12


@dataclass(frozen=True)
class HedgeLeg:
    weights: np.ndarray
    bias: float
    quantity: float
    maturity: float
    classification: analytic.LegClassification | None = None

    def payoff(self, x):
        """Per-unit payoff ``max(weights . x + bias, 0)`` for rows of ``x``."""
        x = np.asarray(x, dtype=np.float64)
        return np.maximum(x @ self.weights + self.bias, 0.0)


@dataclass(frozen=True)
class StaticHedgePortfolio:
    legs: tuple
    cash: float
    maturity: float
    input_space: InputSpace = InputSpace.LOG_PRICE

    @property
    def dim(self):
        return self.legs[0].weights.shape[0] if self.legs else 0

    def as_net(self):
        """The network whose output is this portfolio's payoff."""
        w1 = np.array([leg.weights for leg in self.legs])
        b1 = np.array([leg.bias for leg in self.legs])
        w2 = np.array([leg.quantity for leg in self.legs])
        return ShallowNet(w1, b1, w2, self.cash, self.input_space)

    def payoff(self, s):
        """Realized payoff at maturity for price rows ``s`` (or a single state)."""
        net = self.as_net()
        return analytic.discounted_expected_output(net, s, None, 0.0)


@dataclass(frozen=True)
class HedgeStats:
    mean: float
    std: float
    var95: float
    cvar95: float

    @classmethod
    def from_losses(cls, losses, level=0.95):
        losses = np.asarray(losses, dtype=np.float64)
        var, cvar = var_cvar(losses, level)
        std = float(np.std(losses, ddof=1)) if losses.shape[0] > 1 else 0.0
        return cls(float(np.mean(losses)), std, var, cvar)


def extract_portfolio(net, maturity, scale=1.0):
    """One leg per hidden unit, cash equal to the output bias.

    ``net`` works on prices divided by ``scale`` and returns values in the
    same units; the legs are expressed in currency units, so the
    portfolio's payoff at ``S`` equals ``scale * net(S / scale)``.
    """
    c = float(scale)
    w2 = net.w2 * c
    if net.input_space is InputSpace.LOG_PRICE:
        b1 = net.b1 - math.log(c) * net.w1.sum(axis=1) if c != 1.0 else net.b1
    else:
        b1 = net.b1 * c
        w2 = net.w2
    legs = []
    for i in range(net.p):
        cls = None
        if net.d == 1 and net.input_space is InputSpace.PRICE:
            cls = analytic.classify_leg_1d(net.w1[i, 0], b1[i])
        legs.append(HedgeLeg(net.w1[i].copy(), float(b1[i]), float(w2[i]), float(maturity), cls))
    return StaticHedgePortfolio(tuple(legs), c * net.b2, float(maturity), net.input_space)


def portfolio_value(port, s, t, model):
    """Arbitrage-free value at ``t`` of the portfolio, given prices ``s``."""
    tau = port.maturity - t
    if tau < -_TIME_TOL:
        raise StalePortfolio(f"portfolio matured at {port.maturity}, asked for t={t}")
    return analytic.discounted_expected_output(port.as_net(), s, model, max(tau, 0.0))


def var_cvar(losses, level=0.95):
    """Empirical quantile (linear interpolation) and the mean of losses above it."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise ValueError("need at least one loss")
    var = float(np.quantile(losses, level))
    tail = losses[losses >= var]
    cvar = float(np.mean(tail)) if tail.size else var
    return var, max(cvar, var)


# --------------------------------------------------------------------- targets

@dataclass(frozen=True)
class EuropeanTarget:
    """Vanilla European option valued with Black-Scholes."""

    strike: float
    maturity: float
    is_call: bool = False

    def value(self, s, t, model):
        return analytic.bs_price(s, self.strike, model.rate, float(model.dividend[0]),
                                 float(model.vol[0]), self.maturity - t, self.is_call)

    def delta(self, s, t, model):
        return analytic.bs_delta(s, self.strike, model.rate, float(model.dividend[0]),
                                 float(model.vol[0]), self.maturity - t, self.is_call)


@dataclass(frozen=True)
class PortfolioTarget:
    """A static portfolio used as its own target (zero hedging error)."""

    port: StaticHedgePortfolio

    def value(self, s, t, model):
        return portfolio_value(self.port, np.asarray(s).reshape(-1, 1), t, model)

    def delta(self, s, t, model, bump=1e-4):
        return _central_difference(lambda x: self.value(x, t, model), s, bump)


@dataclass(frozen=True)
class RlnnTarget:
    """Claim valued by the networks of a pricing run, up to the first date.

    Between ``t_0`` and ``t_1`` the value is the discounted expectation of
    ``nets[1]``; at ``t_1`` it is the survival-weighted continuation value
    (or the exercise value if larger), as seen by the pricer.
    """

    result: object

    @property
    def first_date(self):
        return float(self.result.schedule.times[1])

    def value(self, s, t, model=None):
        res = self.result
        if t > self.first_date + _TIME_TOL:
            raise ValueError("RlnnTarget is only defined up to the first monitoring date")
        c = res.scale
        s = np.asarray(s, dtype=np.float64).reshape(-1, 1) / c
        nmodel = res.normalized_model()
        if t < self.first_date - _TIME_TOL:
            return c * analytic.discounted_expected_output(res.nets[1], s, nmodel,
                                                           self.first_date - t)
        nspec = res.normalized_spec()
        big_m = res.schedule.n_dates
        h = np.maximum(intrinsic_batch(nspec, s), 0.0)
        if big_m == 1:
            v = h
        else:
            q = res.continuation(1, s)
            v = np.maximum(h, q) if nspec.exercisable else q
        if nspec.barrier is not None:
            v = np.where(s[:, 0] > nspec.barrier, v, 0.0)
        return c * v

    def delta(self, s, t, model=None, bump=1e-4):
        return _central_difference(lambda x: self.value(x, t, model), s, bump)


def _central_difference(fn, s, bump):
    s = np.asarray(s, dtype=np.float64)
    eps = bump * s
    return (fn(s + eps) - fn(s - eps)) / (2.0 * eps)


# ------------------------------------------------------------------- backtests

def _single_asset(model):
    if model.dim != 1:
        raise DimensionMismatch("hedge backtests are implemented for a single asset")


def static_backtest(target, port, horizon, model, n_paths, seed):
    """Hold ``port`` against a short ``target`` from ``t_0`` to ``horizon``."""
    _single_asset(model)
    if horizon > port.maturity + _TIME_TOL:
        raise StalePortfolio("horizon lies beyond the portfolio maturity")
    s_h = simulate_paths(model, ExerciseSchedule(np.array([0.0, horizon])), n_paths,
                         seed).values[:, 1, 0]
    hedge = portfolio_value(port, s_h.reshape(-1, 1), horizon, model)
    return HedgeStats.from_losses(target.value(s_h, horizon, model) - hedge)


def delta_backtest(target, horizon, n_rebalances, model, n_paths, seed):
    """Self-financing delta hedge rebalanced at ``n_rebalances`` equispaced times.

    The account starts at the target's value at ``t_0``; dividends are
    reinvested in the stock and cash accrues at the risk-free rate.
    """
    _single_asset(model)
    if n_rebalances < 1:
        raise ValueError("n_rebalances must be >= 1")
    sched = ExerciseSchedule.uniform(horizon, n_rebalances)
    s = simulate_paths(model, sched, n_paths, seed).values[:, :, 0]
    r, q = model.rate, float(model.dividend[0])
    dts = sched.dt
    v0 = float(np.ravel(target.value(s[:1, 0], 0.0, model))[0])
    delta = np.broadcast_to(target.delta(s[:, 0], 0.0, model), (n_paths,)).astype(np.float64)
    cash = v0 - delta * s[:, 0]
    for k in range(1, n_rebalances + 1):
        dt = float(dts[k - 1])
        cash = cash * math.exp(r * dt)
        delta = delta * math.exp(q * dt)
        if k < n_rebalances:
            new = np.asarray(target.delta(s[:, k], float(sched.times[k]), model), dtype=np.float64)
            cash = cash - (new - delta) * s[:, k]
            delta = new
    account = delta * s[:, -1] + cash
    return HedgeStats.from_losses(target.value(s[:, -1], horizon, model) - account)


def train_european_hedge_net(model, strike, maturity, t1, hidden, n_train=50000, seed=0,
                             cfg=None, input_space=InputSpace.PRICE, is_call=False):
    """Fit a network maturing at ``t1`` to the Black-Scholes value of a European option.

    Labels are exact option values at ``t1`` on simulated ``S_{t1}``. Returns
    ``(net, scale)`` with the net in units of the spot, ready for
    ``extract_portfolio(net, t1, scale)``.
    """
    _single_asset(model)
    scale = float(model.spot[0])
    nmodel = model.normalized(scale)
    s1 = simulate_paths(nmodel, ExerciseSchedule(np.array([0.0, t1])), n_train,
                        seed).values[:, 1, :]
    y = analytic.bs_price(s1[:, 0], strike / scale, nmodel.rate, float(nmodel.dividend[0]),
                          float(nmodel.vol[0]), maturity - t1, is_call)
    x = np.log(s1) if InputSpace(input_space) is InputSpace.LOG_PRICE else s1
    net = init_net(1, hidden, seed + 1, input_space, anchors=x)
    net, _ = fit(net, x, y, cfg or TrainConfig(), seed=seed + 2)
    return net, scale


# --------------------------------------------------------------------- exports

PORTFOLIO_FIELDS = ["leg_index", "maturity", "quantity", "bias"]


def portfolio_to_csv(port):
    """One row per leg plus a final cash row (empty weights, ``classification=Cash``)."""
    d = port.dim
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PORTFOLIO_FIELDS + [f"w_{j + 1}" for j in range(d)] + ["classification"])
    for i, leg in enumerate(port.legs):
        cls = leg.classification.kind.value if leg.classification else ""
        w.writerow([i, repr(leg.maturity), repr(leg.quantity), repr(leg.bias)]
                   + [repr(float(v)) for v in leg.weights] + [cls])
    w.writerow(["cash", repr(port.maturity), repr(float(port.cash)), ""] + [""] * d + ["Cash"])
    return buf.getvalue()


STAT_NAMES = (("mean", "Mean"), ("std", "Standard Deviation"),
              ("var95", "VaR(95%)"), ("cvar95", "CVaR(95%)"))


def stats_table_csv(entries, columns, digits=4):
    """Table layout: rows are metric x hedge type x option count, columns are scenarios.

    ``entries`` maps ``(hedge_type, count, column)`` to :class:`HedgeStats`;
    ``count`` is ``"NA"`` for the dynamic hedge.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "hedge_type", "options_count"] + [str(c) for c in columns])
    rows = sorted({(h, n) for h, n, _ in entries},
                  key=lambda k: (k[0] != "Static", str(k[1]).zfill(6)))
    for attr, label in STAT_NAMES:
        for hedge_type, count in rows:
            vals = []
            for col in columns:
                st = entries.get((hedge_type, count, col))
                vals.append("" if st is None else f"{getattr(st, attr):.{digits}g}")
            w.writerow([label, hedge_type, count] + vals)
    return buf.getvalue()
