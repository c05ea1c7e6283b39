"""Property battery behind ``bankfunds verify``.

Each check records the measured value next to its tolerance.  Hard checks
decide the exit status; soft ones are diagnostics (known disagreements
between candidate formulas) and are only reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic as an
from .model import BandPolicy, CostModel, MarketParams, ValidatedModel, validate
from .montecarlo import SimConfig, verify_identity
from .paths import sample_paths
from .reflection import closed_form_net, regulate

__all__ = [
    "Check",
    "VerifyReport",
    "root_checks",
    "g_checks",
    "pasting_checks",
    "random_pasting_check",
    "generator_checks",
    "threshold_checks",
    "skorokhod_checks",
    "identity_checks",
    "run_battery",
    "random_market",
    "random_model",
]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    hard: bool = True
    detail: str = ""


def _below(name, value, tol, hard=True, detail="", inclusive=False) -> Check:
    value = float(value)
    ok = value <= tol if inclusive else value < tol
    return Check(name, value, float(tol), bool(ok and math.isfinite(value)), hard, detail)


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple

    @property
    def hard_failures(self) -> list[Check]:
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def ok(self) -> bool:
        return not self.hard_failures

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def random_market(rng, wide: bool = False) -> tuple[MarketParams, float]:
    """A random GBM and a discount rate above its drift.

    ``wide`` draws sigma in [0.05, 2], mu in [-1, 1] and the rate in
    (max(mu, 0) + 0.01, 3]; otherwise a moderate range used for full models.
    """
    if wide:
        mu = rng.uniform(-1.0, 1.0)
        sigma = rng.uniform(0.05, 2.0)
        lo = max(mu, 0.0) + 0.01
        lam = 3.0 - rng.uniform(0.0, 3.0 - lo)
    else:
        mu = rng.uniform(-0.3, 0.3)
        sigma = rng.uniform(0.1, 1.5)
        lam = max(mu, 0.0) + rng.uniform(0.05, 2.0)
    return MarketParams(mu, sigma, rng.uniform(0.5, 2.0)), lam


def random_model(rng) -> ValidatedModel:
    """Random admissible model with ``0 < r < c``."""
    market, lam = random_market(rng)
    floor = max(market.mu, 0.0)
    lam_bar = floor + rng.uniform(0.05, 1.0) * (lam - floor)
    h = rng.uniform(0.1, 2.0)
    costs = CostModel(
        h=h,
        alpha=rng.uniform(0.01, 1.0),
        beta=rng.uniform(0.0, 0.9) * h / lam,
        n=rng.uniform(0.0, 1.0),
        lam=lam,
        lam_bar=lam_bar,
    )
    return validate(market, costs, rng.uniform(0.5, 2.0))


def root_checks(model: ValidatedModel, draws: int, tol: float, seed: int) -> list[Check]:
    out = []
    for label, rate in (("lambda", model.costs.lam), ("lambda_bar", model.costs.lam_bar)):
        roots = an.characteristic_roots(model.market, rate)
        res = max(abs(v) for v in an.root_residuals(roots, model.market))
        out.append(_below(f"root_residual_{label}", res, tol, inclusive=tol == 0))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        market, lam = random_market(rng, wide=True)
        roots = an.characteristic_roots(market, lam)
        worst = max(worst, *(abs(v) for v in an.root_residuals(roots, market)))
    out.append(_below("root_residual_random", worst, tol, detail=f"{draws} draws"))
    return out


def g_checks(model: ValidatedModel, draws: int, seed: int, tol: float = 1e-12) -> list[Check]:
    """``g'(1) = 0`` and ``g`` strictly decreasing on a 100-point grid of (0, 1)."""
    rng = np.random.default_rng(seed)
    grid = np.arange(1, 101) / 101.0
    sets = [an.characteristic_roots(model.market, model.costs.lam)]
    for _ in range(draws):
        market, lam = random_market(rng, wide=True)
        sets.append(an.characteristic_roots(market, lam))
    worst_d = max(abs(float(an.g_deriv(1.0, r))) for r in sets)
    bad = sum(not np.all(np.diff(an.log_g(grid, r)) < 0) for r in sets)
    return [
        _below("g_deriv_at_1", worst_d, tol, detail=f"{len(sets)} root sets"),
        Check("g_decreasing_on_0_1", float(bad), 0.0, bad == 0, True, f"{bad} non-monotone of {len(sets)}"),
    ]


def _pasting_errors(sol: an.GainSolution) -> dict:
    a, b = sol.a, sol.b_star
    k2 = (1.0 - sol.n) * sol.alpha
    d = an.central_derivative
    return {
        "v1_slope_at_a": abs(d(sol.v1.interior, a) - sol.c),
        "v1_slope_at_b": abs(d(sol.v1.interior, b) - sol.r),
        "v2_band_slope_at_a": abs(d(sol.v2_band.interior, a) - k2),
        "v2_band_slope_at_b": abs(d(sol.v2_band.interior, b)),
    }


def pasting_checks(sol: an.GainSolution, tol: float) -> list[Check]:
    out = [_below(f"pasting_{k}", v, tol) for k, v in _pasting_errors(sol).items()]
    k2 = (1.0 - sol.n) * sol.alpha
    power_slope = an.central_derivative(lambda x: an.v2_eval(x, sol.a, sol.alpha, sol.n, sol.roots_bar, extend=False), sol.a)
    out.append(
        Check(
            "pasting_v2_power_law_slope_at_a",
            abs(power_slope - k2),
            tol,
            abs(power_slope - k2) < tol,
            hard=False,
            detail=f"power-law form has slope {power_slope:.6g} at a; the purchase cost rate is +{k2:.6g}",
        )
    )
    return out


def random_pasting_check(count: int, tol: float, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        m = random_model(rng)
        sol = an.solve_gain(m)
        errs = _pasting_errors(sol)
        worst = max(worst, errs["v1_slope_at_a"], errs["v1_slope_at_b"])
    return _below("pasting_random_scenarios", worst, tol, detail=f"{count} scenarios with 0 < r < c")


def _scaled_residual(fn, lo, hi, market, rate):
    x = np.linspace(lo, hi, 201)
    scale = max(float(np.max(np.abs(fn(x)))), 1e-300)
    return an.generator_residual(fn, (lo, hi), market, rate) / scale


def generator_checks(model: ValidatedModel, sol: an.GainSolution, tol: float) -> list[Check]:
    """Residual of ``Gamma u - rate u`` divided by ``max |u|`` on the interval."""
    a, b = sol.a, sol.b_star
    lam, lam_bar = model.costs.lam, model.costs.lam_bar
    power_v2 = lambda x: an.v2_eval(x, a, sol.alpha, sol.n, sol.roots_bar, extend=False)  # noqa: E731
    if sol.n == 1.0:
        v2_items = []
    else:
        v2_items = [
            ("generator_v2_band", sol.v2_band.interior, (a, 2 * b), lam_bar),
            ("generator_v2_power_law", power_v2, (a, 2 * b), lam_bar),
        ]
    out = []
    for name, fn, (lo, hi), rate in [("generator_v1", sol.v1.interior, (a, b), lam)] + v2_items:
        out.append(_below(name, _scaled_residual(fn, lo, hi, model.market, rate), tol))
    return out


def threshold_checks(model: ValidatedModel, verify, probes=None) -> tuple[list[Check], dict]:
    """Compare the threshold equation, the smooth-fit condition and a direct argmax."""
    a, r, c = model.a, model.r, model.c
    roots = an.characteristic_roots(model.market, model.costs.lam)
    b_eq = an.solve_b_star(a, r, c, roots)
    b_fit = an.solve_b_smooth_fit(a, r, c, roots)
    if probes is None:
        probes = sorted({a, model.market.x0, 0.5 * (a + b_fit), b_fit})
    argmaxes = [an.argmax_b_oracle(a, r, c, roots, x) for x in probes]
    b_arg = argmaxes[len(argmaxes) // 2]
    spread = (max(argmaxes) - min(argmaxes)) / b_arg
    foc = max(abs(an.first_order_condition(a, r, c, roots, x, b_arg)) for x in probes)
    rel_eq = abs(b_eq - b_arg) / b_arg
    consistent = rel_eq < verify.argmax_tol
    flag = "consistent" if consistent else (
        f"DISCREPANT: root of g(1)/g(a/b) = r/c gives b = {b_eq!r}, argmax gives b = {b_arg!r}"
    )
    checks = [
        _below("argmax_invariance_over_x", spread, verify.invariance_tol, detail=f"probes {list(map(float, probes))}"),
        _below("argmax_first_order_condition", foc, verify.foc_tol, detail=f"dv_b(x)/db at b = {b_arg!r}"),
        _below("smooth_fit_vs_argmax", abs(b_fit - b_arg) / b_arg, verify.invariance_tol,
               detail=f"v1''(b) = 0 gives b = {b_fit!r}"),
        Check("threshold_equation_vs_argmax", rel_eq, verify.argmax_tol, consistent, hard=False, detail=flag),
    ]
    values = {"b_equation": b_eq, "b_smooth_fit": b_fit, "b_argmax": b_arg}
    if model.costs.n < 1.0:
        # with two discount rates the maximiser of v1 + v2 moves with x
        totals = [an.gain_argmax_b(model, x) for x in probes]
        b_tot = an.gain_argmax_b(model, model.market.x0)
        t_spread = (max(totals) - min(totals)) / b_tot
        checks.append(
            Check("total_gain_argmax_spread_over_x", t_spread, verify.invariance_tol, t_spread < verify.invariance_tol,
                  hard=False, detail=f"argmax of v1 + v2 at x0 is b = {b_tot!r}; over probes {min(totals)!r}..{max(totals)!r}")
        )
        values["b_gain_argmax"] = b_tot
    return checks, values


def formula_gap_checks(model: ValidatedModel, sol: an.GainSolution) -> list[Check]:
    """Soft: closed forms that disagree with the boundary-system solutions."""
    a, b = sol.a, sol.b_star
    x = np.linspace(a, b, 201)
    gap_v1 = float(np.max(np.abs(an.ratio_form_v_b(x, a, b, sol.r, sol.c, sol.roots) - sol.v1(x))))
    x0 = model.market.x0
    gap_v2 = abs(float(sol.v2(x0, "power_law")) - float(sol.v2(x0, "band")))
    return [
        Check("v1_ratio_form_vs_boundary_system", gap_v1, 0.0, gap_v1 == 0.0, hard=False,
              detail="max |gap| on [a, b]; ratio form has barrier slopes c/b and r/a"),
        Check("v2_power_law_vs_band", gap_v2, 0.0, gap_v2 == 0.0, hard=False,
              detail=f"at x0 = {x0!r}: power law {float(sol.v2(x0, 'power_law'))!r}, band {float(sol.v2(x0, 'band'))!r}"),
    ]


def skorokhod_checks(n_paths: int, n_steps: int, tol: float, seed: int, chunk: int = 100) -> list[Check]:
    """Incremental regulator against the closed form on random GBM paths and bands.

    Both the level map (additive dynamics) and the log map (multiplicative)
    are exercised.  Complementarity and containment must hold exactly.
    """
    rng = np.random.default_rng(seed)
    worst = {"additive": 0.0, "log": 0.0}
    off = 0.0
    outside = 0
    for start in range(0, n_paths, chunk):
        m = min(chunk, n_paths - start)
        sigma = rng.uniform(0.2, 1.5)
        market = MarketParams(rng.uniform(-0.5, 0.5), sigma, rng.uniform(0.5, 2.0))
        lo = rng.uniform(0.4, 1.0) * market.x0
        hi = lo * rng.uniform(1.1, 3.0)
        dt = 1.0 / n_steps
        x = sample_paths(market, n_steps * dt, dt, seed, np.arange(start, start + m))
        for key, path, a, b in (("additive", x, lo, hi), ("log", np.log(x), math.log(lo), math.log(hi))):
            z, l, u = regulate(path, a, b)
            w = closed_form_net(path, a, b)
            worst[key] = max(worst[key], float(np.max(np.abs((l - u) - w))))
            dl = np.diff(l, axis=1)
            du = np.diff(u, axis=1)
            off += float(np.sum(dl * (z[:, 1:] > a)) + np.sum(du * (z[:, 1:] < b)))
            off += float(np.sum(l[:, 0] * (z[:, 0] > a)) + np.sum(u[:, 0] * (z[:, 0] < b)))
            outside += int(np.sum((z < a) | (z > b)))
    detail = f"{n_paths} paths x {n_steps} steps"
    return [
        _below("skorokhod_closed_form_additive", worst["additive"], tol, detail=detail),
        _below("skorokhod_closed_form_log", worst["log"], tol, detail=detail),
        _below("skorokhod_complementarity", abs(off), 0.0, inclusive=True),
        _below("skorokhod_containment", float(outside), 0.0, inclusive=True),
    ]


def identity_checks(model: ValidatedModel, band: BandPolicy, cfg: SimConfig) -> tuple[list[Check], object]:
    rep = verify_identity(model, band, cfg)
    out = []
    exact_gbm = cfg.dynamics == "additive" or model.market.mu == 0
    for res in rep.residuals:
        est = res.estimate
        bound = 3.0 * est.stderr + res.allowance
        hard = res.hard and (res.name != "gbm_offset" or exact_gbm)
        out.append(
            Check(
                f"identity_{res.name}",
                abs(est.mean),
                bound,
                abs(est.mean) < bound,
                hard,
                f"{est.mean!r} +/- {est.stderr!r} (3 SE + allowance {res.allowance:.3g}); {cfg.dynamics} dynamics",
            )
        )
    for label, est in (("discounted_purchases", rep.discounted_l), ("discounted_sales", rep.discounted_u)):
        finite = math.isfinite(est.mean) and math.isfinite(est.stderr)
        out.append(
            Check(f"integrability_{label}", est.mean, est.stderr, finite, hard=False,
                  detail=f"mean {est.mean:.6g}, stderr {est.stderr:.3g}")
        )
    return out, rep


def run_battery(scenario, identity=True) -> tuple[VerifyReport, dict]:
    """All checks for a scenario; returns the report and the threshold values."""
    v = scenario.verify
    seed = scenario.simulation.seed
    checks: list[Check] = []
    values: dict = {}
    if scenario.market.sigma > 0:
        model = scenario.model("analytic")
        sol = an.solve_gain(model, threshold=scenario.b if scenario.b else scenario.threshold,
                            v2_form=scenario.v2_form)
        checks += root_checks(model, v.random_draws, v.root_tol, seed)
        checks += g_checks(model, v.random_draws, seed)
        checks += pasting_checks(sol, v.pasting_tol)
        checks.append(random_pasting_check(v.random_scenarios, v.pasting_tol, seed))
        checks += generator_checks(model, sol, v.generator_tol)
        tc, values = threshold_checks(model, v)
        checks += tc
        checks += formula_gap_checks(model, sol)
        b = sol.b_star
    else:
        model = scenario.model("simulation")
        b = scenario.b
        if b is None:
            raise ValueError("a sigma = 0 scenario needs an explicit [band].b")
    checks += skorokhod_checks(v.skorokhod_paths, v.skorokhod_steps, v.equivalence_tol, seed)
    if identity:
        sim = scenario.simulation
        cfg = SimConfig(
            n_paths=v.identity_paths,
            dt=sim.dt,
            seed=seed,
            horizon=sim.horizon,
            tail_cap=sim.tail_cap,
            dynamics=sim.identity_dynamics,
            boundary_correction=False,
            workers=sim.workers,
        )
        sim_model = scenario.model("simulation")
        ic, _ = identity_checks(sim_model, BandPolicy(model.a, b), cfg)
        checks += ic
    return VerifyReport(tuple(checks)), values
