"""Regress-later Monte Carlo with shallow ReLU networks for Bermudan pricing and hedging."""
from .kernels import BACKEND
from .market import ExerciseSchedule, GbmModel, simulate_paths
from .network import InputSpace, ShallowNet, TrainConfig
from .payoff import PayoffKind, PayoffSpec
from .pricer import RlnnResult, rlnn_backward
from .bounds import evaluate_bounds, lower_bound, upper_bound
from .hedge import extract_portfolio, portfolio_value

__all__ = [
    "BACKEND", "ExerciseSchedule", "GbmModel", "simulate_paths", "InputSpace", "ShallowNet",
    "TrainConfig", "PayoffKind", "PayoffSpec", "RlnnResult", "rlnn_backward",
    "evaluate_bounds", "lower_bound", "upper_bound", "extract_portfolio", "portfolio_value",
]
__version__ = "0.1.0"
