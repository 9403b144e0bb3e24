import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rlnn.errors import DimensionMismatch
from rlnn.network import (
    AdamState, InputSpace, ShallowNet, TrainConfig, adam_step, fit, forward, gradient, init_net,
    mse, warm_start,
)


def relu_net(w1, b1, w2, b2=0.0):
    return ShallowNet(np.array(w1, dtype=float).reshape(len(b1), -1), b1, w2, b2)


def finite_difference(net, x, y, step=1e-6):
    theta = net.flat()
    out = np.empty_like(theta)
    for k in range(theta.shape[0]):
        e = np.zeros_like(theta)
        e[k] = step
        out[k] = (gradient(net.with_flat(theta + e), x, y)[0]
                  - gradient(net.with_flat(theta - e), x, y)[0]) / (2 * step)
    return out


class TestForward:
    def test_dead_relu(self):
        assert forward(relu_net([1.0], [0.0], [1.0]), np.array([-3.0])) == 0.0

    def test_abs_plus_cash(self):
        net = relu_net([[1.0], [-1.0]], [0.0, 0.0], [1.0, 1.0], 5.0)
        assert forward(net, np.array([2.0])) == 7.0

    def test_batch_and_mismatch(self):
        net = init_net(3, 4, 0)
        out = forward(net, np.zeros((6, 3)))
        assert out.shape == (6,)
        with pytest.raises(DimensionMismatch):
            forward(net, np.zeros(2))

    @given(st.floats(0.01, 100.0))
    def test_positive_homogeneity(self, alpha):
        rng = np.random.default_rng(1)
        net = ShallowNet(rng.normal(size=(5, 2)), np.zeros(5), rng.normal(size=5), 0.0)
        x = rng.normal(size=2)
        assert forward(net, alpha * x) == pytest.approx(alpha * forward(net, x), rel=1e-12, abs=1e-14)

    def test_param_count_and_flat(self):
        net = init_net(3, 7, 2)
        assert net.n_params == 1 + 7 + 7 + 21
        assert net.flat().shape == (net.n_params,)
        back = net.with_flat(net.flat())
        assert np.array_equal(back.flat(), net.flat())

    def test_immutable(self):
        net = init_net(1, 3, 0)
        with pytest.raises(ValueError):
            net.w1[0, 0] = 1.0

    def test_json_round_trip_exact(self):
        net = init_net(2, 5, 3, InputSpace.PRICE)
        back = ShallowNet.from_json(net.to_json())
        assert np.array_equal(back.flat(), net.flat()) and back.input_space is InputSpace.PRICE
        assert set(net.to_dict()) == {"p", "d", "input_space", "w1", "b1", "w2", "b2"}

    def test_inconsistent_shapes(self):
        with pytest.raises(DimensionMismatch):
            ShallowNet(np.ones((3, 1)), np.ones(2), np.ones(3), 0.0)


class TestGradient:
    def test_bias_only(self):
        net = relu_net([[1.0]], [0.0], [0.0], 0.7)
        y = np.array([0.1, 0.4, 1.3])
        _, g = gradient(net, np.ones((3, 1)), y)
        assert g[-1] == pytest.approx(2 * np.mean(0.7 - y), abs=1e-15)

    def test_finite_difference_small(self):
        rng = np.random.default_rng(4)
        net = ShallowNet(rng.normal(size=(3, 2)), rng.normal(size=3), rng.normal(size=3), 0.2)
        x, y = rng.normal(size=(16, 2)), rng.normal(size=16)
        g = gradient(net, x, y)[1]
        fd = finite_difference(net, x, y)
        assert np.max(np.abs(fd - g) / np.maximum(np.abs(g), 1e-8)) < 1e-5

    def test_dead_region_exact_zero(self):
        net = relu_net([[1.0], [2.0]], [-10.0, -10.0], [1.0, 1.0])
        _, g = gradient(net, np.ones((5, 1)), np.ones(5))
        assert np.all(g[:4] == 0.0)

    def test_zero_preactivation_subgradient(self):
        net = relu_net([[1.0]], [0.0], [1.0])
        _, g = gradient(net, np.zeros((1, 1)), np.ones(1))
        assert g[0] == 0.0 and g[1] == 0.0


class TestAdam:
    cfg = TrainConfig()

    def test_zero_gradient(self):
        p = np.array([1.0, -2.0, 3.0])
        state = AdamState.zeros(3)
        for _ in range(5):
            p2, state = adam_step(p, np.zeros(3), state, self.cfg)
            assert np.array_equal(p2, p)

    def test_first_step_sign(self):
        g = np.array([0.3, -4.0, 1e-3])
        p, _ = adam_step(np.zeros(3), g, AdamState.zeros(3), self.cfg)
        np.testing.assert_allclose(p, -1e-3 * np.sign(g), atol=1e-6)

    def test_two_steps_against_scalar_recursion(self):
        cfg = self.cfg
        g1, g2 = np.array([0.5, -1.0, 2.0]), np.array([0.1, 0.3, -0.2])
        p, state = adam_step(np.ones(3), g1, AdamState.zeros(3), cfg)
        p, state = adam_step(p, g2, state, cfg)
        for k in range(3):
            m = v = 0.0
            theta = 1.0
            for t, g in enumerate((g1[k], g2[k]), start=1):
                m = 0.9 * m + 0.1 * g
                v = 0.999 * v + 0.001 * g * g
                theta -= 1e-3 * (m / (1 - 0.9**t)) / ((v / (1 - 0.999**t)) ** 0.5 + 1e-8)
            assert p[k] == pytest.approx(theta, abs=1e-15)
        assert state.t == 2


class TestFit:
    def test_config_validation(self):
        for kw in ({"split": 1.0}, {"patience": 0}, {"batch_fraction": 0.0}, {"max_epochs": 0}):
            with pytest.raises(ValueError):
                TrainConfig(**kw)

    def test_zero_targets(self):
        x = np.random.default_rng(0).normal(size=(500, 1))
        net, rep = fit(init_net(1, 4, 1), x, np.zeros(500), seed=2)
        assert rep.degenerate and rep.val_mse < 1e-6
        assert np.all(forward(net, x) == 0.0)

    def test_representable_call_payoff(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0.0, 2.0, size=(50000, 1))
        y = np.maximum(x[:, 0] - 1.0, 0.0)
        net, rep = fit(init_net(1, 8, 3, anchors=x), x, y, seed=4)
        assert rep.val_mse < 1e-5

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(400, 2))
        y = np.sin(x[:, 0]) + x[:, 1] ** 2
        cfg = TrainConfig(max_epochs=20)
        a, _ = fit(init_net(2, 6, 1), x, y, cfg, seed=9)
        b, _ = fit(init_net(2, 6, 1), x, y, cfg, seed=9)
        assert np.array_equal(a.flat(), b.flat())

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_never_worse_than_initial(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(60, 1))
        y = np.abs(x[:, 0]) + 0.1 * rng.normal(size=60)
        init = init_net(1, 3, seed)
        net, rep = fit(init, x, y, TrainConfig(max_epochs=5, patience=1), seed=seed)
        perm = np.random.default_rng(seed).permutation(60)
        va = np.sort(perm[42:])
        assert rep.val_mse <= mse(init, x[va], y[va]) + 1e-15
        assert rep.val_mse == pytest.approx(mse(net, x[va], y[va]), rel=1e-12)

    def test_input_checks(self):
        net = init_net(1, 2, 0)
        with pytest.raises(ValueError):
            fit(net, np.ones((5, 1)), np.arange(5.0))
        with pytest.raises(ValueError):
            fit(net, np.ones((20, 1)), np.full(20, np.nan))
        with pytest.raises(DimensionMismatch):
            fit(net, np.ones((20, 2)), np.arange(20.0))

    def test_warm_start_copies(self):
        net = init_net(2, 3, 0)
        w = warm_start(net)
        assert w is not net and np.array_equal(w.flat(), net.flat())


def test_init_anchors_put_kinks_in_data():
    anchors = np.random.default_rng(1).normal(3.0, 0.1, size=(1000, 1))
    net = init_net(1, 50, 2, anchors=anchors)
    kinks = -net.b1 / net.w1[:, 0]
    assert np.all((kinks > anchors.min() - 1e-9) & (kinks < anchors.max() + 1e-9))
    plain = init_net(1, 50, 2)
    assert np.all(np.abs(plain.b1) <= 1.0) and plain.b2 == 0.0
