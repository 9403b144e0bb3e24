"""Fast oracle-equivalence and invariant checks, run by ``rlnn selftest``."""
from __future__ import annotations

import math

import numpy as np

from . import _pykernels, analytic, hedge, kernels, oracle
from .market import ExerciseSchedule, GbmModel, simulate_paths
from .network import InputSpace, ShallowNet, gradient, forward, init_net

# Random123 known-answer vectors for Philox4x32-10
PHILOX_KAT = (
    ((0, 0, 0, 0, 0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 6, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344, 0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
)


def random_net(rng, d, p, input_space=InputSpace.LOG_PRICE):
    return ShallowNet(rng.normal(size=(p, d)), rng.normal(size=p), rng.normal(size=p),
                      rng.normal(), input_space)


def check_philox():
    for args, want in PHILOX_KAT:
        got = kernels.philox4x32(*[np.uint32(a) for a in args[:4]], args[4], args[5])
        if tuple(int(v) for v in got) != want:
            return False, f"got {[hex(int(v)) for v in got]}"
    return True, "3 known-answer vectors"


def check_backends():
    """Compiled kernels agree with the numpy reference."""
    rng = np.random.default_rng(0)
    u_fast = kernels.uniforms(7, 3, 50, 4, 3)
    u_ref = _pykernels.uniforms(7, 3, 50, 4, 3)
    if not np.array_equal(u_fast, u_ref):
        return False, "uniform streams differ"
    net = random_net(rng, 3, 16)
    x = rng.normal(size=(200, 3))
    y = rng.normal(size=200)
    a = kernels.mse_grad(x, y, net.w1, net.b1, net.w2, net.b2)
    b = _pykernels.mse_grad(x, y, net.w1, net.b1, net.w2, net.b2)
    err = max(float(np.max(np.abs(np.asarray(u) - np.asarray(v)))) for u, v in zip(a, b))
    return err < 1e-10, f"backend={kernels.BACKEND}, max grad diff {err:.1e}"


def check_gradient(n_cases=10):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(n_cases):
        net = random_net(rng, int(rng.integers(1, 4)), int(rng.integers(1, 8)))
        x = rng.normal(size=(20, net.d))
        y = rng.normal(size=20)
        _, g = gradient(net, x, y)
        theta = net.flat()
        fd = np.empty_like(theta)
        for k in range(theta.shape[0]):
            e = np.zeros_like(theta)
            e[k] = 1e-6
            lp, _ = gradient(net.with_flat(theta + e), x, y)
            lm, _ = gradient(net.with_flat(theta - e), x, y)
            fd[k] = (lp - lm) / 2e-6
        worst = max(worst, float(np.max(np.abs(fd - g) / np.maximum(np.abs(g), 1e-3))))
    return worst < 1e-5, f"max relative error {worst:.1e}"


def check_continuation_mc():
    rng = np.random.default_rng(2)
    model = GbmModel([1.0, 1.2], 0.05, [0.2, 0.3], 0.01, [[1.0, 0.4], [0.4, 1.0]])
    net = random_net(rng, 2, 8)
    dt = 0.25
    cv = analytic.continuation_value(net, model.spot, model, dt)
    paths = simulate_paths(model, ExerciseSchedule(np.array([0.0, dt])), 400000, 11).values
    payoff = math.exp(-model.rate * dt) * forward(net, np.log(paths[:, 1, :]))
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1)) / math.sqrt(payoff.shape[0])
    return abs(cv - mean) < 4 * se, f"closed form {cv:.6f}, MC {mean:.6f} +- {se:.1e}"


def check_binomial_european():
    times = np.linspace(0.0, 1.0, 11)
    tree = oracle.binomial_bermudan_1d(40.0, 40.0, 0.06, 0.0, 0.2, times, 5000, european=True)
    bs = analytic.bs_price(40.0, 40.0, 0.06, 0.0, 0.2, 1.0, False)
    return abs(tree - bs) < 1e-3, f"tree {tree:.6f}, Black-Scholes {bs:.6f}"


def check_portfolio_identity():
    rng = np.random.default_rng(3)
    net = init_net(3, 12, 4)
    port = hedge.extract_portfolio(net, 0.5, scale=2.0)
    s = np.exp(rng.normal(size=(1000, 3))) * 2.0
    direct = 2.0 * forward(net, np.log(s / 2.0))
    legs = sum(leg.quantity * leg.payoff(np.log(s)) for leg in port.legs) + port.cash
    err = float(np.max(np.abs(legs - direct)))
    return err < 1e-12, f"max diff {err:.1e}"


CHECKS = (
    ("philox known answers", check_philox),
    ("compiled vs numpy kernels", check_backends),
    ("gradient vs finite differences", check_gradient),
    ("continuation value vs Monte Carlo", check_continuation_mc),
    ("binomial European vs Black-Scholes", check_binomial_european),
    ("portfolio payoff identity", check_portfolio_identity),
)


def run(out=print):
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return failures
