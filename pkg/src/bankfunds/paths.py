"""Exact-in-law GBM paths on a uniform grid with reproducible per-path streams.

Every path index owns an independent Philox counter stream keyed by
``(master, path_index)``, so a path is the same no matter which other
indices are generated, in what order, or by how many workers.  Normals are
obtained by inverse-CDF from open-interval uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .errors import InvalidGrid
from .model import MarketParams

__all__ = [
    "Seed",
    "SamplePath",
    "n_steps",
    "time_grid",
    "standard_normals",
    "sample_paths",
    "sample_path",
    "expected_level",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    master: int
    path_index: int = 0


@dataclass(frozen=True)
class SamplePath:
    t0: float
    dt: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) * self.dt


def n_steps(horizon: float, dt: float) -> int:
    """Number of grid steps covering ``[0, horizon]``."""
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidGrid(f"dt must be > 0, got {dt}")
    if not horizon >= dt:
        raise InvalidGrid(f"horizon {horizon} shorter than dt {dt}")
    return int(math.ceil(horizon / dt - 1e-9))


def time_grid(horizon: float, dt: float, t0: float = 0.0) -> np.ndarray:
    return t0 + np.arange(n_steps(horizon, dt) + 1) * dt


def _philox_key(master: int, index: int) -> int:
    return ((int(master) & _MASK64) << 64) | (int(index) & _MASK64)


def standard_normals(master: int, indices: Sequence[int], count: int) -> np.ndarray:
    """``(len(indices), count)`` standard normals, one row per path stream."""
    indices = np.asarray(indices, dtype=np.int64).ravel()
    raw = np.empty((len(indices), count), dtype=np.uint64)
    for row, idx in enumerate(indices):
        raw[row] = np.random.Philox(key=_philox_key(master, idx)).random_raw(count)
    # 53-bit mantissa plus half an ulp: uniforms in the open interval (0, 1)
    raw >>= np.uint64(11)
    u = raw.astype(np.float64)
    u += 0.5
    u *= 2.0**-53
    return ndtri(u, out=u)


def sample_paths(
    market: MarketParams,
    horizon: float,
    dt: float,
    master: int,
    indices: Sequence[int],
    log: bool = False,
) -> np.ndarray:
    """Paths for several stream indices, shape ``(len(indices), N + 1)``.

    Uses exact lognormal stepping, so the marginal law at every node is
    exact.  With ``log=True`` the log-levels are returned instead.
    """
    n = n_steps(horizon, dt)
    indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    t = np.arange(n + 1) * dt
    drift = (market.mu - 0.5 * market.sigma**2) * t
    out = np.empty((len(indices), n + 1))
    out[:, 0] = 0.0
    if market.sigma > 0:
        xi = standard_normals(master, indices, n)
        np.cumsum(xi, axis=1, out=out[:, 1:])
        out *= market.sigma * math.sqrt(dt)
        out += drift
    else:
        out[:] = drift
    out += math.log(market.x0)
    if not log:
        np.exp(out, out=out)
    return out


def sample_path(market: MarketParams, horizon: float, dt: float, seed: Seed) -> SamplePath:
    values = sample_paths(market, horizon, dt, seed.master, [seed.path_index])[0]
    return SamplePath(t0=0.0, dt=dt, values=values)


def expected_level(market: MarketParams, t: float) -> float:
    """``E[X_t] = x0 * exp(mu * t)``."""
    if t < 0:
        raise InvalidGrid(f"t must be >= 0, got {t}")
    return market.x0 * math.exp(market.mu * t)
