"""Monte Carlo estimates of the cost and gain functionals under feasible policies.

Paths are processed in fixed-size chunks of consecutive stream indices.
Chunk boundaries never depend on the worker count, and per-path results
are reduced in index order, so any number of workers gives bit-identical
output.  All policies passed together see the same paths (common random
numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic
from .errors import HorizonTooShort
from .model import BandPolicy, FloorOnly, PolicySpec, ValidatedModel
from .paths import n_steps, sample_paths
from .reflection import DISCRETE_MONITORING_SHIFT, control_batch

__all__ = [
    "SimConfig",
    "MCEstimate",
    "PathFunctionals",
    "ScanRow",
    "IdentityReport",
    "discounted_stieltjes",
    "tail_bound",
    "default_horizon",
    "simulate_functionals",
    "estimate",
    "estimate_gain",
    "estimate_cost",
    "verify_identity",
    "optimality_scan",
]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.  ``horizon=None`` picks the shortest horizon meeting ``tail_cap``."""

    n_paths: int
    dt: float
    seed: int
    horizon: float | None = None
    tail_cap: float = 1e-4
    dynamics: str = "multiplicative"
    boundary_correction: bool = True
    workers: int = 1
    chunk_size: int = 256


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    horizon: float
    dt: float
    tail_bound: float

    @classmethod
    def from_samples(cls, samples, horizon, dt, tail):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(float(np.mean(samples)), se, n, horizon, dt, tail)

    def z_score(self, reference: float) -> float:
        return (self.mean - reference) / self.stderr


@dataclass
class PathFunctionals:
    """Per-path discounted integrals; every array has one entry per path.

    ``l``, ``u``: ``int e^{-lam t} dL`` and ``dU``;  ``l_bar``: ``int e^{-lam_bar t} dL``;
    ``hold_z``, ``hold_x``: ``int e^{-lam t} Z dt`` and the same for the free path.
    """

    l: np.ndarray
    u: np.ndarray
    l_bar: np.ndarray
    hold_z: np.ndarray
    hold_x: np.ndarray
    horizon: float
    dt: float
    tail_bound: float

    def gain(self, model: ValidatedModel) -> np.ndarray:
        k = model.costs
        return model.r * self.u - model.c * self.l - (1.0 - k.n) * k.alpha * self.l_bar

    def cost(self, model: ValidatedModel) -> np.ndarray:
        k = model.costs
        return (
            k.h * self.hold_z
            + k.beta * self.u
            + k.n * k.alpha * self.l
            + (1.0 - k.n) * k.alpha * self.l_bar
        )

    def summarize(self, samples) -> MCEstimate:
        return MCEstimate.from_samples(samples, self.horizon, self.dt, self.tail_bound)


def discounted_stieltjes(increments, rate: float, dt: float):
    """Left-point sum ``sum_k e^{-rate t_k} dF_k``.

    ``increments[..., 0]`` is the time-0 jump (factor 1); ``increments[..., k]``
    for ``k >= 1`` is the change over step ``[t_{k-1}, t_k]``, discounted at
    ``t_{k-1}``.
    """
    inc = np.asarray(increments, dtype=float)
    n = inc.shape[-1]
    disc = np.exp(-rate * dt * np.arange(max(n - 1, 0)))
    return inc[..., 0] + inc[..., 1:] @ disc


def _cumulative_stieltjes(cum, disc):
    # cum: cumulative control per node; disc[k] = e^{-rate t_k} for k < N
    return cum[:, 0] + (cum[:, 1:] - cum[:, :-1]) @ disc


def _decay_rate(model: ValidatedModel) -> float:
    return model.costs.lam_bar - max(model.market.mu, 0.0)


def tail_bound(model: ValidatedModel, horizon: float) -> float:
    """Discount mass beyond ``horizon``: ``exp(-(lam_bar - max(mu, 0)) T)``."""
    rate = _decay_rate(model)
    return math.exp(-rate * horizon) if rate > 0 else 1.0


def default_horizon(model: ValidatedModel, cap: float = 1e-4) -> float:
    rate = _decay_rate(model)
    if not rate > 0:
        raise HorizonTooShort("lambda_bar <= mu: no finite horizon meets the tail cap")
    return math.log(1.0 / cap) / rate


def _resolve_horizon(model, cfg: SimConfig):
    horizon = cfg.horizon if cfg.horizon is not None else default_horizon(model, cfg.tail_cap)
    tail = tail_bound(model, horizon)
    if tail > cfg.tail_cap * (1.0 + 1e-9):
        raise HorizonTooShort(
            f"tail bound {tail:.3g} at horizon {horizon:g} exceeds cap {cfg.tail_cap:g}"
        )
    return horizon, tail


def _shift(model, cfg):
    if cfg.dynamics == "multiplicative" and cfg.boundary_correction:
        return DISCRETE_MONITORING_SHIFT * model.market.sigma * math.sqrt(cfg.dt)
    return 0.0


def simulate_functionals(
    model: ValidatedModel, policies: list[PolicySpec], cfg: SimConfig
) -> list[PathFunctionals]:
    """Simulate ``cfg.n_paths`` paths once and apply every policy to each of them."""
    horizon, tail = _resolve_horizon(model, cfg)
    dt = cfg.dt
    n = n_steps(horizon, dt)
    t = np.arange(n) * dt
    lam, lam_bar = model.costs.lam, model.costs.lam_bar
    disc = np.exp(-lam * t)
    disc_bar = np.exp(-lam_bar * t)
    wdt = disc * dt
    shift = _shift(model, cfg)

    def run_chunk(start):
        stop = min(start + cfg.chunk_size, cfg.n_paths)
        x = sample_paths(model.market, horizon, dt, cfg.seed, np.arange(start, stop))
        hold_x = x[:, :-1] @ wdt
        res = []
        for pol in policies:
            z, l, u, _, _ = control_batch(x, pol, cfg.dynamics, shift)
            res.append(
                (
                    _cumulative_stieltjes(l, disc),
                    _cumulative_stieltjes(u, disc),
                    _cumulative_stieltjes(l, disc_bar),
                    z[:, :-1] @ wdt,
                    hold_x,
                )
            )
        return res

    starts = range(0, cfg.n_paths, cfg.chunk_size)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(run_chunk, starts))
    else:
        chunks = [run_chunk(s) for s in starts]

    out = []
    for j in range(len(policies)):
        cols = [np.concatenate([ch[j][q] for ch in chunks]) for q in range(5)]
        out.append(PathFunctionals(*cols, horizon=horizon, dt=dt, tail_bound=tail))
    return out


def estimate(model, policy, cfg, quantity="gain") -> MCEstimate:
    (pf,) = simulate_functionals(model, [policy], cfg)
    samples = pf.gain(model) if quantity == "gain" else pf.cost(model)
    return pf.summarize(samples)


def estimate_gain(policy: PolicySpec, model: ValidatedModel, n_paths, horizon, dt, seed, **opts) -> MCEstimate:
    """Estimate ``E int e^{-lam t}(r dU - c dL) - E int e^{-lam_bar t}(1-n) alpha dL``."""
    cfg = SimConfig(n_paths=n_paths, dt=dt, seed=seed, horizon=horizon, **opts)
    return estimate(model, policy, cfg, "gain")


def estimate_cost(policy: PolicySpec, model: ValidatedModel, n_paths, horizon, dt, seed, **opts) -> MCEstimate:
    """Estimate ``E int [e^{-lam t}(h Z dt + beta dU) + (n e^{-lam t} + (1-n) e^{-lam_bar t}) alpha dL]``."""
    cfg = SimConfig(n_paths=n_paths, dt=dt, seed=seed, horizon=horizon, **opts)
    return estimate(model, policy, cfg, "cost")


@dataclass(frozen=True)
class Residual:
    name: str
    estimate: MCEstimate
    allowance: float = 0.0
    hard: bool = True

    def passes(self, k: float = 3.0) -> bool:
        return abs(self.estimate.mean) < k * self.estimate.stderr + self.allowance


@dataclass(frozen=True)
class IdentityReport:
    gain: MCEstimate
    cost: MCEstimate
    definition: Residual
    abm_offset: Residual
    gbm_offset: Residual
    discounted_l: MCEstimate
    discounted_u: MCEstimate
    dynamics: str

    @property
    def residuals(self):
        return [self.definition, self.abm_offset, self.gbm_offset]


def verify_identity(model: ValidatedModel, band: BandPolicy, cfg: SimConfig) -> IdentityReport:
    """Cost + gain on common paths against the three candidate right-hand sides.

    (i) ``h int e^{-lam t} Z dt + (h/lam) int e^{-lam t}(dU - dL)``, which
    follows from the two definitions alone; (ii) the offset
    ``h x0/lam + h mu/lam**2`` of the arithmetic-Brownian model; (iii)
    ``h x0/(lam - mu)``.  Under additive dynamics (``Z = X + L - U``)
    (iii) holds exactly; under multiplicative dynamics only when mu = 0.
    """
    (pf,) = simulate_functionals(model, [band], cfg)
    k = model.costs
    h, lam, mu, x0 = k.h, k.lam, model.market.mu, model.market.x0
    g = pf.gain(model)
    c = pf.cost(model)
    both = g + c
    res_def = both - (h * pf.hold_z + (h / lam) * (pf.u - pf.l))
    # left-point quadrature overstates each discounted term by about lam dt / 2; plus truncation
    allowance = float(0.5 * lam * cfg.dt * (h * abs(np.mean(pf.hold_z)) + (h / lam) * (np.mean(pf.l) + np.mean(pf.u))))
    allowance += (h * x0 / max(lam - mu, 1e-12)) * pf.tail_bound
    return IdentityReport(
        gain=pf.summarize(g),
        cost=pf.summarize(c),
        definition=Residual("definition", pf.summarize(res_def), allowance),
        abm_offset=Residual(
            "abm_offset", pf.summarize(both - (h * x0 / lam + h * mu / lam**2)), allowance, hard=False
        ),
        gbm_offset=Residual("gbm_offset", pf.summarize(both - h * x0 / (lam - mu)), allowance),
        discounted_l=pf.summarize(pf.l),
        discounted_u=pf.summarize(pf.u),
        dynamics=cfg.dynamics,
    )


@dataclass(frozen=True)
class ScanRow:
    b: float
    policy_tag: str
    gain_estimate: MCEstimate
    analytic_gain: float
    diff_mean: float = 0.0
    diff_stderr: float = 0.0
    flagged: bool = False
    is_reference: bool = False


def _policy_analytic(model, policy):
    if model.mode != "analytic":
        return math.nan
    return analytic.policy_gain(model.market.x0, policy, model)


def optimality_scan(
    model: ValidatedModel,
    b_grid,
    b_star: float,
    cfg: SimConfig,
    include_floor: bool = True,
    k: float = 3.0,
) -> list[ScanRow]:
    """Gain of ``Band(a, b)`` for each ``b`` (plus ``FloorOnly``) on common paths.

    ``b_star`` is added to the grid when missing.  A row is flagged when its
    gain exceeds the ``b_star`` row by more than ``k`` combined standard
    errors ``sqrt(se**2 + se_star**2)``.
    """
    grid = sorted({float(b) for b in b_grid})
    if not any(math.isclose(b, b_star, rel_tol=1e-12) for b in grid):
        grid = sorted(grid + [float(b_star)])
    ref = min(range(len(grid)), key=lambda i: abs(grid[i] - b_star))
    policies: list[PolicySpec] = [BandPolicy(model.a, b) for b in grid]
    if include_floor:
        policies.append(FloorOnly(model.a))
    results = simulate_functionals(model, policies, cfg)
    gains = [pf.gain(model) for pf in results]
    ests = [pf.summarize(g) for pf, g in zip(results, gains)]
    ref_est = ests[ref]
    rows = []
    for i, (pol, est) in enumerate(zip(policies, ests)):
        diff = results[i].summarize(gains[i] - gains[ref])
        combined = math.hypot(est.stderr, ref_est.stderr)
        rows.append(
            ScanRow(
                b=pol.b,
                policy_tag=pol.tag,
                gain_estimate=est,
                analytic_gain=_policy_analytic(model, pol),
                diff_mean=diff.mean,
                diff_stderr=diff.stderr,
                flagged=(i != ref) and (est.mean - ref_est.mean > k * combined),
                is_reference=(i == ref),
            )
        )
    return rows

