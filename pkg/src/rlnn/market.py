"""Risk-neutral multivariate GBM market and exact path simulation."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidSchedule, NotPositiveSemiDefinite

PIVOT_TOL = 1e-12


def cholesky(corr):
    """Lower-triangular ``L`` with ``L @ L.T == corr``.

    Accepts positive semi-definite input: pivots in ``[-1e-12, 0]`` are
    clamped to zero and the matching column below the diagonal is zeroed.

    Raises
    ------
    NotPositiveSemiDefinite
        If a pivot falls below ``-1e-12``.
    """
    a = np.array(corr, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"correlation must be square, got shape {a.shape}")
    d = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot < -PIVOT_TOL:
            raise NotPositiveSemiDefinite(f"pivot {pivot:.3e} at index {j}")
        if pivot <= PIVOT_TOL:
            # rank deficient direction; the residual column must vanish
            continue
        root = np.sqrt(pivot)
        lower[j, j] = root
        for i in range(j + 1, d):
            lower[i, j] = (a[i, j] - lower[i, :j] @ lower[j, :j]) / root
    return lower


@dataclass(frozen=True)
class GbmModel:
    """Multivariate geometric Brownian motion under the pricing measure.

    ``rate`` is the continuously compounded short rate, ``dividend`` the
    per-asset continuous yield, ``vol`` per-asset volatility and ``corr`` the
    instantaneous correlation of the driving Brownian motions.
    """

    spot: np.ndarray
    rate: float
    vol: np.ndarray
    dividend: np.ndarray | None = None
    corr: np.ndarray | None = None
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spot = np.atleast_1d(np.asarray(self.spot, dtype=np.float64)).copy()
        d = spot.shape[0]
        vol = np.broadcast_to(np.asarray(self.vol, dtype=np.float64), (d,)).copy()
        div = 0.0 if self.dividend is None else self.dividend
        div = np.broadcast_to(np.asarray(div, dtype=np.float64), (d,)).copy()
        corr = np.eye(d) if self.corr is None else np.array(self.corr, dtype=np.float64)
        if corr.shape != (d, d):
            raise DimensionMismatch(f"corr shape {corr.shape} does not match dim {d}")
        if not np.allclose(corr, corr.T, atol=1e-12, rtol=0.0):
            raise ValueError("corr must be symmetric")
        if not np.allclose(np.diag(corr), 1.0, atol=1e-12, rtol=0.0):
            raise ValueError("corr must have unit diagonal")
        if np.any(spot <= 0):
            raise ValueError("spot must be strictly positive")
        if np.any(vol <= 0):
            raise ValueError("vol must be strictly positive")
        for arr in (spot, vol, div, corr):
            arr.flags.writeable = False
        object.__setattr__(self, "spot", spot)
        object.__setattr__(self, "vol", vol)
        object.__setattr__(self, "dividend", div)
        object.__setattr__(self, "corr", corr)
        chol = cholesky(corr)
        chol.flags.writeable = False
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def dim(self):
        return self.spot.shape[0]

    @property
    def drift(self):
        """Per-asset drift of the log price, ``r - q - sigma^2 / 2``."""
        return self.rate - self.dividend - 0.5 * self.vol**2

    @property
    def covariance(self):
        """Annualized covariance of log returns, ``rho_ij sigma_i sigma_j``."""
        return self.corr * np.outer(self.vol, self.vol)

    def with_spot(self, spot):
        spot = np.broadcast_to(np.asarray(spot, dtype=np.float64), (self.dim,))
        return GbmModel(spot, self.rate, self.vol, self.dividend, self.corr)

    def normalized(self, scale):
        """Same dynamics with every spot divided by ``scale``."""
        return self.with_spot(self.spot / scale)

    def to_dict(self):
        return {
            "spot": self.spot.tolist(),
            "rate": self.rate,
            "vol": self.vol.tolist(),
            "dividend": self.dividend.tolist(),
            "corr": self.corr.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            np.array(data["spot"]), data["rate"], np.array(data["vol"]),
            np.array(data["dividend"]), np.array(data["corr"]),
        )


@dataclass(frozen=True)
class ExerciseSchedule:
    """Monitoring dates ``t_0 = 0 < t_1 < ... < t_M = T`` in years."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).ravel().copy()
        if t.shape[0] < 2:
            raise InvalidSchedule("schedule needs at least t_0 and t_M (M >= 1)")
        if t[0] != 0.0:
            raise InvalidSchedule(f"schedule must start at 0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise InvalidSchedule("schedule times must be strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, maturity, n_dates):
        return cls(np.linspace(0.0, maturity, n_dates + 1))

    @property
    def n_dates(self):
        """Number of monitoring dates after t_0 (M)."""
        return self.times.shape[0] - 1

    @property
    def maturity(self):
        return float(self.times[-1])

    @property
    def dt(self):
        return np.diff(self.times)


@dataclass(frozen=True)
class PathSet:
    """Simulated prices with shape ``(n_paths, M + 1, d)``; read-only."""

    values: np.ndarray
    seed: int
    schedule: ExerciseSchedule

    @property
    def n_paths(self):
        return self.values.shape[0]


def _thread_count():
    try:
        return max(1, int(os.environ.get("RLNN_THREADS", "1")))
    except ValueError:
        return 1


def _simulate_block(model, schedule, seed, start, count):
    z = kernels.normals(seed, start, count, schedule.n_dates, model.dim)
    dt = schedule.dt
    # explicit accumulation keeps each path's arithmetic independent of the block shape
    shocks = np.zeros_like(z)
    for i in range(model.dim):
        for j in range(i + 1):
            if model.chol[i, j] != 0.0:
                shocks[..., i] += model.chol[i, j] * z[..., j]
    shocks *= model.vol
    shocks *= np.sqrt(dt)[None, :, None]
    shocks += (model.drift[None, :] * dt[:, None])[None, :, :]
    out = np.empty((count, schedule.n_dates + 1, model.dim))
    out[:, 0, :] = 0.0
    np.cumsum(shocks, axis=1, out=out[:, 1:, :])
    np.exp(out, out=out)
    out *= model.spot
    out[:, 0, :] = model.spot
    return out


def simulate_paths(model, schedule, n_paths, seed, n_threads=None, block_size=65536):
    """Exact log-normal paths on the schedule.

    Shocks for path ``n`` and date ``m`` come from a counter-based stream keyed
    by ``(seed, n, m)``, so the result does not depend on ``n_threads`` or
    ``block_size``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n_threads = _thread_count() if n_threads is None else max(1, int(n_threads))
    starts = list(range(0, n_paths, block_size))
    sizes = [min(block_size, n_paths - s) for s in starts]
    if n_threads == 1 or len(starts) == 1:
        blocks = [_simulate_block(model, schedule, seed, s, c) for s, c in zip(starts, sizes)]
    else:
        with ThreadPoolExecutor(n_threads) as pool:
            blocks = list(pool.map(
                lambda sc: _simulate_block(model, schedule, seed, *sc), zip(starts, sizes)
            ))
    values = blocks[0] if len(blocks) == 1 else np.concatenate(blocks, axis=0)
    values.flags.writeable = False
    return PathSet(values, int(seed), schedule)
