"""Built-in parameter sets for the reproduced experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import ExerciseSchedule, GbmModel
from .payoff import PayoffKind, PayoffSpec

SET2_VOL = (0.518, 0.648, 0.623, 0.570, 0.530)
SET2_CORR = (
    (1.00, 0.79, 0.82, 0.91, 0.84),
    (0.79, 1.00, 0.73, 0.80, 0.76),
    (0.82, 0.73, 1.00, 0.77, 0.72),
    (0.91, 0.80, 0.77, 1.00, 0.90),
    (0.84, 0.76, 0.72, 0.90, 1.00),
)
SET2_WEIGHTS = (0.381, 0.065, 0.057, 0.270, 0.227)

# trading days per year implied by a 60-day claim with T = 0.2
DAYS_PER_YEAR = 300


@dataclass(frozen=True)
class Experiment:
    name: str
    model: GbmModel
    schedule: ExerciseSchedule
    spec: PayoffSpec
    hidden: int


def set1(s0=40.0, hidden=32):
    """Single-asset Bermudan put."""
    model = GbmModel([s0], 0.06, [0.2])
    return Experiment("set1", model, ExerciseSchedule.uniform(1.0, 10),
                      PayoffSpec(PayoffKind.VANILLA_PUT, 40.0), hidden)


def set2(s0=1.0, hidden=64):
    """Five-asset arithmetic basket put."""
    model = GbmModel(np.full(5, s0), 0.05, SET2_VOL, 0.0, SET2_CORR)
    return Experiment("set2", model, ExerciseSchedule.uniform(1.0, 10),
                      PayoffSpec(PayoffKind.ARITHMETIC_BASKET_PUT, 1.0, SET2_WEIGHTS), hidden)


def set3(s0=100.0, dim=2, hidden=None):
    """Max call on ``dim`` independent assets with dividends."""
    if hidden is None:
        hidden = {2: 256, 3: 512, 5: 1024}.get(dim, 256)
    model = GbmModel(np.full(dim, s0), 0.05, 0.2, 0.1, np.eye(dim))
    return Experiment(f"set3-d{dim}", model, ExerciseSchedule.uniform(3.0, 9),
                      PayoffSpec(PayoffKind.MAX_CALL, 100.0), hidden)


def set4(s0=1.0, strike=1.0, hidden=50):
    """European put for the one-month hedging experiment (no early exercise)."""
    model = GbmModel([s0], 0.1, [0.3])
    return Experiment("set4", model, ExerciseSchedule.uniform(1.0, 1),
                      PayoffSpec(PayoffKind.VANILLA_PUT, strike), hidden)


def set5(s0=1.0, barrier=0.97, hidden=20):
    """Discretely monitored down-and-out call, 5 monitoring dates over 60 days."""
    model = GbmModel([s0], 0.1, [0.3])
    return Experiment("set5", model, ExerciseSchedule.uniform(0.2, 5),
                      PayoffSpec(PayoffKind.DOWN_OUT_CALL, 1.0, barrier=barrier), hidden)


PRESETS = {"set1": set1, "set2": set2, "set3": set3, "set4": set4, "set5": set5}

# published reference prices used by the acceptance experiments
REFERENCE = {
    ("set1", 36.0): 4.4425,
    ("set1", 40.0): 2.2929,
    ("set1", 44.0): 1.0984,
    ("set2", 0.9): 0.2220,
    ("set2", 1.0): 0.1803,
    ("set2", 1.1): 0.1463,
    ("set3-d2", 100.0): 13.902,
    ("set3-d3", 100.0): 18.69,
}
SET3_D5_LITERATURE_CI = (26.115, 26.164)


def preset(name, **kwargs):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown parameter set {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**kwargs)
