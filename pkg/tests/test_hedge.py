import math

import numpy as np
import pytest

from rlnn import hedge, presets
from rlnn.analytic import LegKind
from rlnn.bounds import _evaluate
from rlnn.errors import StalePortfolio
from rlnn.market import GbmModel, simulate_paths
from rlnn.network import InputSpace, ShallowNet, forward, init_net
from rlnn.pricer import rlnn_backward


@pytest.fixture(scope="module")
def small_set1():
    ex = presets.set1()
    return rlnn_backward(ex.model, ex.schedule, ex.spec, n_train=10000, hidden=8, seed=3)


class TestVarCvar:
    def test_zeros(self):
        assert hedge.var_cvar(np.zeros(50)) == (0.0, 0.0)

    def test_one_to_hundred(self):
        var, cvar = hedge.var_cvar(np.arange(1.0, 101.0), 0.95)
        assert var == pytest.approx(95.05)
        assert cvar == pytest.approx(np.mean([96, 97, 98, 99, 100]))

    def test_tail_dominance(self):
        x = np.random.default_rng(0).standard_t(3, size=1000)
        var, cvar = hedge.var_cvar(x)
        assert cvar >= var

    def test_stats(self):
        st = hedge.HedgeStats.from_losses(np.arange(1.0, 101.0))
        assert st.mean == 50.5 and st.std == pytest.approx(np.std(np.arange(1, 101), ddof=1))


class TestExtraction:
    @pytest.mark.parametrize("space,scale", [(InputSpace.LOG_PRICE, 1.0), (InputSpace.LOG_PRICE, 40.0),
                                             (InputSpace.PRICE, 1.0), (InputSpace.PRICE, 3.0)])
    def test_payoff_identity(self, space, scale):
        rng = np.random.default_rng(1)
        d = 1 if space is InputSpace.PRICE else 2
        net = ShallowNet(rng.normal(size=(6, d)), rng.normal(size=6), rng.normal(size=6), 0.4, space)
        port = hedge.extract_portfolio(net, 0.25, scale)
        assert len(port.legs) == 6 and port.maturity == 0.25
        s = scale * np.exp(rng.normal(0, 0.3, size=(1000, d)))
        x = np.log(s) if space is InputSpace.LOG_PRICE else s
        legs = sum(leg.quantity * leg.payoff(x) for leg in port.legs) + port.cash
        direct = scale * forward(net, net.transform(s / scale))
        assert np.max(np.abs(legs - direct)) < 1e-12 * max(1.0, scale)
        np.testing.assert_allclose(port.payoff(s), direct, rtol=1e-12, atol=1e-12 * scale)

    def test_two_legs(self):
        net = init_net(1, 2, 0)
        port = hedge.extract_portfolio(net, 1.0)
        assert len(port.legs) == 2 and port.cash == net.b2

    def test_call_like_classification(self):
        net = ShallowNet([[1.0], [2.0], [0.5]], [-1.0, -0.5, -2.0], [1.0, 1.0, 1.0], 0.0, InputSpace.PRICE)
        port = hedge.extract_portfolio(net, 0.5)
        assert all(leg.classification.kind is LegKind.CALL_LIKE for leg in port.legs)
        assert port.legs[1].classification.strike == 0.25

    def test_value_matches_pricer_exactly(self, small_set1):
        res = small_set1
        port = hedge.extract_portfolio(res.nets[1], float(res.schedule.times[1]))
        s0 = res.normalized_model().spot
        assert hedge.portfolio_value(port, s0, 0.0, res.normalized_model()) == res.q0
        s = np.array([[0.8], [1.0], [1.3]])
        t2 = float(res.schedule.times[2])
        port2 = hedge.extract_portfolio(res.nets[2], t2)
        t1 = float(res.schedule.times[1])
        assert np.array_equal(hedge.portfolio_value(port2, s, t1, res.normalized_model()),
                              res.continuation(1, s))

    def test_currency_value(self, small_set1):
        res = small_set1
        port = hedge.extract_portfolio(res.nets[1], float(res.schedule.times[1]), res.scale)
        assert hedge.portfolio_value(port, res.model.spot, 0.0, res.model) == pytest.approx(
            res.scale * res.q0, rel=1e-12)

    def test_stale(self):
        port = hedge.extract_portfolio(init_net(1, 2, 0), 0.5)
        with pytest.raises(StalePortfolio):
            hedge.portfolio_value(port, [1.0], 0.6, GbmModel([1.0], 0.0, [0.2]))

    def test_csv_export(self):
        port = hedge.extract_portfolio(init_net(2, 3, 0), 0.5, 2.0)
        lines = hedge.portfolio_to_csv(port).splitlines()
        assert lines[0] == "leg_index,maturity,quantity,bias,w_1,w_2,classification"
        assert len(lines) == 5 and lines[-1].startswith("cash,")


def test_rollover_consistency(small_set1):
    """Maturing portfolio pays for the next one or for the exercised payoff, on average."""
    res = small_set1
    values = simulate_paths(res.normalized_model(), res.schedule, 200000, 91).values
    ev = _evaluate(res, values)
    big_m = res.schedule.n_dates
    for i in range(big_m):
        nxt = i + 1
        if nxt == big_m:
            v = ev.h[:, nxt]
        else:
            v = np.maximum(ev.h[:, nxt], ev.q[:, nxt])
        resid = ev.disc[nxt] * (ev.g[:, nxt] - v)
        se = resid.std(ddof=1) / math.sqrt(resid.shape[0])
        # the residual mean is a fit bias, so it is compared against a 1e-3 (relative to spot) floor too
        assert abs(resid.mean()) < max(3 * se, 1e-3), (i, resid.mean(), se)


class TestBacktests:
    model = GbmModel([1.0], 0.1, [0.3])
    target = hedge.EuropeanTarget(1.0, 1.0)

    def test_perfect_replication(self):
        port = hedge.extract_portfolio(init_net(1, 4, 2, InputSpace.PRICE), 1 / 12)
        st = hedge.static_backtest(hedge.PortfolioTarget(port), port, 1 / 12, self.model, 2000, 1)
        assert (st.mean, st.std, st.var95, st.cvar95) == (0.0, 0.0, 0.0, 0.0)

    def test_horizon_beyond_maturity(self):
        port = hedge.extract_portfolio(init_net(1, 4, 2, InputSpace.PRICE), 1 / 12)
        with pytest.raises(StalePortfolio):
            hedge.static_backtest(self.target, port, 0.5, self.model, 10, 1)

    def test_zero_vol_delta_hedge(self):
        model = GbmModel([1.0], 0.1, [1e-8])
        st = hedge.delta_backtest(hedge.EuropeanTarget(1.2, 1.0), 1 / 12, 25, model, 1000, 1)
        assert max(abs(st.mean), st.std, abs(st.var95), abs(st.cvar95)) < 1e-9

    def test_more_rebalances_reduce_std(self):
        a = hedge.delta_backtest(self.target, 1 / 12, 25, self.model, 20000, 3)
        b = hedge.delta_backtest(self.target, 1 / 12, 50, self.model, 20000, 3)
        assert b.std < a.std
        assert abs(a.mean) < 3 * a.std / math.sqrt(20000) + 1e-5

    def test_static_hedge_small(self):
        net, scale = hedge.train_european_hedge_net(self.model, 1.0, 1.0, 1 / 12, 10, n_train=20000, seed=1)
        port = hedge.extract_portfolio(net, 1 / 12, scale)
        assert all(leg.classification is not None for leg in port.legs)
        st = hedge.static_backtest(self.target, port, 1 / 12, self.model, 20000, 5)
        assert st.std < 5e-3 and abs(st.mean) < 1e-3

    def test_rlnn_target_domain(self, small_set1):
        tgt = hedge.RlnnTarget(small_set1)
        with pytest.raises(ValueError):
            tgt.value(np.array([40.0]), 0.5)
        v0 = tgt.value(np.array([40.0]), 0.0)
        assert v0[0] == pytest.approx(small_set1.scale * small_set1.q0, rel=1e-12)


def test_stats_table_layout():
    st = hedge.HedgeStats(1e-5, 2e-4, 4e-4, 7e-4)
    entries = {("Static", 10, 1.0): st, ("Static", 50, 1.0): st, ("Dynamic", "NA", 1.0): st}
    lines = hedge.stats_table_csv(entries, [1.0]).splitlines()
    assert lines[0] == "metric,hedge_type,options_count,1.0"
    assert lines[1:4] == ["Mean,Static,10,1e-05", "Mean,Static,50,1e-05", "Mean,Dynamic,NA,1e-05"]
    assert len(lines) == 1 + 4 * 3
