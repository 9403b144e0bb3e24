"""Backward induction that trains one network per monitoring date."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .errors import DimensionMismatch, InvalidSchedule
from .market import ExerciseSchedule, GbmModel, simulate_paths
from .network import (
    FitReport, InputSpace, ShallowNet, TrainConfig, fit, init_net, warm_start,
)
from .payoff import PayoffKind, PayoffSpec, intrinsic_batch, survival_matrix

log = logging.getLogger(__name__)


def exercise_decision(h, q):
    """Exercise iff the intrinsic value strictly beats the continuation value."""
    return h > q


def derive_seed(seed, *tags):
    """Deterministic 64-bit child seed for a (seed, tag...) tuple."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *tags])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RlnnResult:
    """Trained networks (in normalized units) and the direct price estimate.

    ``nets[m]`` approximates the value function at ``t_m`` for ``m = 1..M``;
    prices fed to the networks are divided by ``scale`` first and network
    outputs are in the same normalized units. ``q0`` is the normalized
    continuation value at ``t_0``.
    """

    nets: dict
    direct_estimate: float
    fit_reports: dict
    model: GbmModel
    schedule: ExerciseSchedule
    spec: PayoffSpec
    scale: float
    q0: float
    seed: int = 0
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def hidden(self):
        return self.nets[1].p

    @property
    def input_space(self):
        return self.nets[1].input_space

    def normalized_model(self):
        return self.model.normalized(self.scale)

    def normalized_spec(self):
        return self.spec.scaled(self.scale)

    def continuation(self, m, s_norm):
        """Normalized continuation value at ``t_m`` from ``nets[m + 1]``."""
        dt = float(self.schedule.times[m + 1] - self.schedule.times[m])
        return analytic.discounted_expected_output(
            self.nets[m + 1], s_norm, self.normalized_model(), dt
        )

    def to_dict(self):
        return {
            "format": "rlnn-result/1",
            "direct_estimate": self.direct_estimate,
            "q0": self.q0,
            "scale": self.scale,
            "seed": self.seed,
            "model": self.model.to_dict(),
            "schedule": self.schedule.times.tolist(),
            "spec": self.spec.to_dict(),
            "nets": {str(m): net.to_dict() for m, net in sorted(self.nets.items())},
            "fit_reports": {str(m): r.to_dict() for m, r in sorted(self.fit_reports.items())},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data):
        return cls(
            nets={int(m): ShallowNet.from_dict(v) for m, v in data["nets"].items()},
            direct_estimate=data["direct_estimate"],
            fit_reports={int(m): FitReport(**v) for m, v in data.get("fit_reports", {}).items()},
            model=GbmModel.from_dict(data["model"]),
            schedule=ExerciseSchedule(np.array(data["schedule"])),
            spec=PayoffSpec.from_dict(data["spec"]),
            scale=data["scale"],
            q0=data["q0"],
            seed=data.get("seed", 0),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def normalization_scale(model):
    """Scalar used to bring prices to unit scale (the first asset's spot)."""
    return float(model.spot[0])


def rlnn_backward(model, schedule, spec, n_train=50000, hidden=32, cfg=None, seed=0,
                  input_space=InputSpace.LOG_PRICE, keep_paths=False):
    """Regress-later value iteration with one shallow network per date.

    Paths are simulated with prices normalized by the first spot; strike and
    barrier are scaled the same way and the estimate is scaled back at the
    end. For barrier claims each network is trained on the paths alive before
    its date, with knocked-out labels set to zero, and continuation values of
    dead paths are zero.
    """
    cfg = cfg or TrainConfig()
    spec.validate()
    if schedule.n_dates < 1:
        raise InvalidSchedule("need at least one monitoring date")
    input_space = InputSpace(input_space)
    if input_space is InputSpace.PRICE and model.dim != 1:
        raise DimensionMismatch("price-space networks are only supported for d = 1")
    if spec.kind is PayoffKind.DOWN_OUT_CALL and not spec.barrier < model.spot[0]:
        raise ValueError("barrier must lie below the initial spot")

    scale = normalization_scale(model)
    nmodel = model.normalized(scale)
    nspec = spec.scaled(scale)
    paths = simulate_paths(nmodel, schedule, n_train, seed)
    s = paths.values
    times = schedule.times
    big_m = schedule.n_dates
    alive = survival_matrix(nspec, s)

    h = np.maximum(intrinsic_batch(nspec, s), 0.0)
    value = h[:, big_m] * alive[:, big_m]

    anchors = np.log(s[:, big_m]) if input_space is InputSpace.LOG_PRICE else s[:, big_m]
    net = init_net(model.dim, hidden, derive_seed(seed, 0xA11CE), input_space, anchors=anchors)
    nets, reports = {}, {}
    q_prev = None
    for m in range(big_m, 0, -1):
        train = alive[:, m - 1]
        x = net.transform(s[train, m])
        net, rep = fit(net, x, value[train], cfg, seed=derive_seed(seed, m))
        nets[m], reports[m] = net, rep
        log.debug("date %d: val mse %.3e after %d epochs", m, rep.val_mse, rep.epochs)

        dt = float(times[m] - times[m - 1])
        q = np.zeros(n_train)
        q[train] = analytic.discounted_expected_output(net, s[train, m - 1], nmodel, dt)
        if spec.exercisable:
            hm = h[:, m - 1]
            value = np.where(exercise_decision(hm, q), hm, q)
        else:
            value = q * alive[:, m - 1]
        q_prev = q
        net = warm_start(net)

    s0 = nmodel.spot
    q0 = analytic.discounted_expected_output(nets[1], s0, nmodel, float(times[1]))
    h0 = max(float(intrinsic_batch(nspec, s0)), 0.0)
    direct = max(h0, q0) if spec.exercisable else q0
    extras = {}
    if keep_paths:
        extras = {"paths": paths, "q_t0_paths": q_prev, "v_t0_paths": value}
    return RlnnResult(nets, scale * direct, reports, model, schedule, spec, scale, q0,
                      seed=int(seed), extras=extras)
