"""Closed forms for the band policy: roots, g, gain components, thresholds.

Inside a band ``[a, b]`` every value function below solves
``mu x u' + sigma^2/2 x^2 u'' = rate * u`` and is therefore a combination of
``x**gamma2`` and ``x**-gamma1``.  The combination is fixed by the slopes at
the two barriers (``c`` and ``r`` for the main gain component).  To keep the
coefficients O(1) they are stored against the scaled basis
``(x/b)**gamma2`` and ``(x/a)**-gamma1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateBand,
    DegenerateSaleRevenue,
    DiscountBelowDrift,
    InvalidGrid,
    InvalidParameter,
    NonPositiveArgument,
    NonPositiveVolatility,
    SingularSystem,
)
from .model import BandPolicy, FloorOnly, MarketParams, ValidatedModel

__all__ = [
    "Roots",
    "BandValue",
    "GainSolution",
    "characteristic_roots",
    "root_residuals",
    "g_eval",
    "g_deriv",
    "log_g",
    "solve_band_value",
    "solve_v1_coefficients",
    "solve_b_star",
    "solve_b_smooth_fit",
    "argmax_b_oracle",
    "first_order_condition",
    "gain_argmax_b",
    "golden_section_max",
    "v1_eval",
    "v2_eval",
    "v2_band_value",
    "ratio_form_v_b",
    "solve_gain",
    "total_gain",
    "policy_gain",
    "cost_from_gain",
    "generator_residual",
    "central_derivative",
    "deterministic_gain",
]


@dataclass(frozen=True)
class Roots:
    """``-gamma1`` and ``gamma2`` solve ``sigma^2 g^2/2 + (mu - sigma^2/2) g - rate = 0``."""

    gamma1: float
    gamma2: float
    rate: float


def characteristic_roots(market: MarketParams, rate: float) -> Roots:
    if not market.sigma > 0:
        raise NonPositiveVolatility("characteristic roots need sigma > 0")
    if not rate > 0:
        raise InvalidParameter(f"rate must be > 0, got {rate}")
    s2 = market.sigma**2
    m = market.mu - 0.5 * s2
    d = math.sqrt(m * m + 2.0 * s2 * rate)
    # the root without cancellation first; the other from gamma1 * gamma2 = 2 rate / sigma^2
    if m >= 0:
        g1 = (d + m) / s2
        g2 = 2.0 * rate / (s2 * g1)
    else:
        g2 = (d - m) / s2
        g1 = 2.0 * rate / (s2 * g2)
    return Roots(gamma1=g1, gamma2=g2, rate=rate)


def root_residuals(roots: Roots, market: MarketParams) -> tuple[float, float]:
    """Quadratic evaluated exactly (rational arithmetic) at ``-gamma1`` and ``gamma2``."""
    s2 = Fraction(market.sigma) ** 2
    m = Fraction(market.mu) - s2 / 2
    lam = Fraction(roots.rate)

    def q(g):
        g = Fraction(g)
        return s2 * g * g / 2 + m * g - lam

    return float(q(-roots.gamma1)), float(q(roots.gamma2))


def _check_positive(y):
    arr = np.asarray(y, dtype=float)
    if np.any(~(arr > 0)):
        raise NonPositiveArgument("g is defined for y > 0 only")
    return arr


def g_eval(y, roots: Roots):
    """``g(y) = gamma1 y**gamma2 + gamma2 y**-gamma1``."""
    y = _check_positive(y)
    return roots.gamma1 * y**roots.gamma2 + roots.gamma2 * y ** (-roots.gamma1)


def g_deriv(y, roots: Roots):
    y = _check_positive(y)
    g1, g2 = roots.gamma1, roots.gamma2
    return g1 * g2 * (y ** (g2 - 1.0) - y ** (-g1 - 1.0))


def log_g(y, roots: Roots):
    """``log g(y)`` without overflow for large exponents."""
    y = _check_positive(y)
    ly = np.log(y)
    return np.logaddexp(
        math.log(roots.gamma1) + roots.gamma2 * ly, math.log(roots.gamma2) - roots.gamma1 * ly
    )


@dataclass(frozen=True)
class BandValue:
    """Solution of the band ODE with prescribed slopes at ``a`` and ``b``.

    On ``[a, b]``: ``p (x/b)**gamma2 + q (x/a)**-gamma1``.  Outside, the
    function continues linearly with the boundary slopes (an immediate
    purchase or sale back to the barrier).  ``b = inf`` is the one-sided
    case, where only the decaying mode survives.
    """

    roots: Roots
    a: float
    b: float
    slope_low: float
    slope_high: float
    p: float
    q: float

    @property
    def coef_A(self) -> float:
        """Coefficient of ``x**gamma2``."""
        if self.p == 0.0:
            return 0.0
        return self.p / self.b**self.roots.gamma2

    @property
    def coef_B(self) -> float:
        """Coefficient of ``x**-gamma1``."""
        return self.q * self.a**self.roots.gamma1

    def interior(self, x):
        x = np.asarray(x, dtype=float)
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        out = self.q * (x / self.a) ** (-g1)
        if self.p != 0.0:
            out = out + self.p * (x / self.b) ** g2
        return out

    def interior_deriv(self, x):
        x = np.asarray(x, dtype=float)
        g1, g2 = self.roots.gamma1, self.roots.gamma2
        out = -g1 * self.q * (x / self.a) ** (-g1) / x
        if self.p != 0.0:
            out = out + g2 * self.p * (x / self.b) ** g2 / x
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.a, self.b)
        out = self.interior(xc)
        out = np.where(x < self.a, out - self.slope_low * (self.a - x), out)
        if math.isfinite(self.b):
            out = np.where(x > self.b, out + self.slope_high * (x - self.b), out)
        return out[()] if out.ndim == 0 else out


def solve_band_value(a, b, slope_low, slope_high, roots: Roots) -> BandValue:
    """Fit the two modes so that ``v'(a) = slope_low`` and ``v'(b) = slope_high``."""
    if not a > 0:
        raise InvalidParameter(f"a must be > 0, got {a}")
    g1, g2 = roots.gamma1, roots.gamma2
    if math.isinf(b):
        return BandValue(roots, a, b, slope_low, 0.0, p=0.0, q=-slope_low * a / g1)
    if not b >= a:
        raise InvalidParameter(f"need b >= a, got a={a}, b={b}")
    y = a / b
    gap = -math.expm1((g1 + g2) * math.log(y))
    if gap < 1e-14:
        raise SingularSystem(f"boundary system singular for a={a}, b={b}")
    det = g1 * g2 * gap
    sl, sh = a * slope_low, b * slope_high
    p = g1 * (sh - sl * y**g1) / det
    q = g2 * (sh * y**g2 - sl) / det
    return BandValue(roots, a, b, slope_low, slope_high, p=p, q=q)


def solve_v1_coefficients(a, b, r, c, roots: Roots) -> tuple[float, float]:
    """``(A, B)`` with ``v1 = A x**gamma2 + B x**-gamma1``, ``v1'(a) = c``, ``v1'(b) = r``."""
    bv = solve_band_value(a, b, c, r, roots)
    return bv.coef_A, bv.coef_B


def _check_rates(r, c):
    if not r > 0:
        raise DegenerateSaleRevenue(f"r = {r:g} <= 0: no sale barrier exists")
    if r > c:
        raise InvalidParameter(f"need c >= r, got r={r:g}, c={c:g}")


def _bracket(f, a, max_doublings=200):
    hi = 2.0 * a
    for _ in range(max_doublings):
        if f(hi) < 0:
            return hi
        hi *= 2.0
    raise RuntimeError("could not bracket the threshold")


def solve_b_star(a, r, c, roots: Roots, check_monotone: bool = True) -> float:
    """Root ``b > a`` of ``g(1) / g(a/b) = r / c`` (the ratio threshold equation).

    The left side falls strictly from 1 at ``b = a`` to 0 as ``b -> inf``,
    so doubling finds a bracket and Brent's method converges to 1e-12
    relative.  ``r == c`` returns ``a`` with a :class:`DegenerateBand` warning.
    """
    _check_rates(r, c)
    if r == c:
        warnings.warn("r == c: band collapses to b* = a", DegenerateBand)
        return float(a)
    target = math.log(r / c)
    lg1 = float(log_g(1.0, roots))

    def f(b):
        return lg1 - float(log_g(a / b, roots)) - target

    hi = _bracket(f, a)
    if check_monotone:
        bs = np.linspace(a, hi, 101)[1:]
        vals = lg1 - log_g(a / bs, roots)
        if not np.all(np.diff(vals) < 0):
            raise RuntimeError("g(1)/g(a/b) is not strictly decreasing on the bracket")
    return brentq(f, a, hi, xtol=1e-300, rtol=1e-12, maxiter=500)


def solve_b_smooth_fit(a, r, c, roots: Roots) -> float:
    """Barrier at which ``v_b'' (b) = 0``, i.e. ``d v_b(x) / db = 0`` for every x.

    With ``y = a/b`` the condition reads
    ``[(gamma1+1) y**(gamma2-1) + (gamma2-1) y**(-gamma1-1)] / (gamma1+gamma2) = c/r``;
    the left side decreases from +inf to 1 on ``(0, 1)`` when ``gamma2 > 1``
    (equivalently ``rate > mu``).
    """
    _check_rates(r, c)
    g1, g2 = roots.gamma1, roots.gamma2
    if not g2 > 1:
        raise DiscountBelowDrift("smooth fit needs gamma2 > 1 (discount rate above drift)")
    if r == c:
        warnings.warn("r == c: band collapses to b* = a", DegenerateBand)
        return float(a)
    shifted = Roots(gamma1=g1 + 1.0, gamma2=g2 - 1.0, rate=roots.rate)
    target = math.log(c / r)
    lg1 = float(log_g(1.0, shifted))

    def f(b):
        return target - (float(log_g(a / b, shifted)) - lg1)

    hi = _bracket(f, a)
    return brentq(f, a, hi, xtol=1e-300, rtol=1e-12, maxiter=500)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-11, max_iter: int = 500):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(argmax, max)``."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= rtol * 0.5 * (abs(lo) + abs(hi)):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
    if f1 >= f2:
        return x1, f1
    return x2, f2


def _v_of_b(a, r, c, roots, x):
    def value(b):
        return float(solve_band_value(a, b, c, r, roots)(x))

    return value


def argmax_b_oracle(a, r, c, roots: Roots, x_probe: float) -> float:
    """Barrier maximising ``b -> v_b(x_probe)``, found by golden-section search.

    Independent of both threshold equations: the bracket comes from doubling
    ``b`` until the probed value stops increasing.
    """
    _check_rates(r, c)
    if r == c:
        warnings.warn("r == c: band collapses to b* = a", DegenerateBand)
        return float(a)
    if not x_probe > 0:
        raise InvalidParameter("x_probe must be > 0")
    value = _v_of_b(a, r, c, roots, x_probe)
    lo = a * (1.0 + 1e-9)
    b = 2.0 * a
    for _ in range(200):
        if value(2.0 * b) <= value(b):
            break
        b *= 2.0
    arg, _ = golden_section_max(value, lo, 2.0 * b)
    return arg


def gain_argmax_b(model: ValidatedModel, x_probe: float) -> float:
    """Barrier maximising the total gain ``v1 + v2`` (band form of ``v2``) at ``x_probe``.

    Unlike the maximiser of ``v1`` alone this depends (weakly) on ``x_probe``
    when ``n < 1``, because the two components are discounted at different rates.
    """
    _check_rates(model.r, model.c)
    a = model.a

    def value(b):
        return policy_gain(x_probe, BandPolicy(a, b), model)

    b = 2.0 * a
    for _ in range(200):
        if value(2.0 * b) <= value(b):
            break
        b *= 2.0
    arg, _ = golden_section_max(value, a * (1.0 + 1e-9), 2.0 * b)
    return arg


def first_order_condition(a, r, c, roots: Roots, x_probe: float, b: float, rel_step: float = 1e-6) -> float:
    """Central difference of ``v_b(x_probe)`` with respect to ``b``."""
    value = _v_of_b(a, r, c, roots, x_probe)
    hb = rel_step * b
    return (value(b + hb) - value(b - hb)) / (2.0 * hb)


def v2_eval(x, a, alpha, n, roots_bar: Roots, extend: bool = True):
    """The power-law closed form ``-(1-n) alpha / (gamma2 a**(gamma2-1)) x**gamma2`` at the lambda_bar root.

    Below ``a`` it continues linearly with its own slope at ``a``, ``-(1-n) alpha``,
    unless ``extend`` is false (then the power law is used everywhere).
    """
    x = np.asarray(x, dtype=float)
    g = roots_bar.gamma2
    k = (1.0 - n) * alpha / (g * a ** (g - 1.0))
    if not extend:
        out = -k * x**g
        return out[()] if out.ndim == 0 else out
    xa = np.maximum(x, a)
    out = -k * xa**g
    out = np.where(x < a, out - (1.0 - n) * alpha * (x - a), out)
    return out[()] if out.ndim == 0 else out


def v2_band_value(a, b, alpha, n, roots_bar: Roots) -> BandValue:
    """``-(1-n) alpha E[int e^{-lambda_bar t} dL]`` under the band ``[a, b]``.

    Slope ``(1-n) alpha`` at the floor (a lower start buys more) and 0 at the
    ceiling (a higher start is sold off at no purchase cost).
    """
    return solve_band_value(a, b, (1.0 - n) * alpha, 0.0, roots_bar)


def ratio_form_v_b(x, a, b, r, c, roots: Roots):
    """Literal ``r/g'(b/a) g(x/a) + c/g'(a/b) g(x/b)`` on ``[a, b]``, linear with slope r above ``b``.

    Its barrier slopes are ``c/b`` and ``r/a``; kept for comparison only.
    """
    x = np.asarray(x, dtype=float)

    def inner(z):
        return r / g_deriv(b / a, roots) * g_eval(z / a, roots) + c / g_deriv(a / b, roots) * g_eval(
            z / b, roots
        )

    xc = np.clip(x, a, b)
    out = np.where(x > b, inner(b) + (x - b) * r, inner(xc))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class GainSolution:
    """Everything needed to evaluate the gain of the band ``[a, b_star]``.

    ``v2_form`` selects the second component: ``"band"`` (expected discounted
    purchases under the two-sided band) or ``"power_law"``.
    """

    a: float
    b_star: float
    r: float
    c: float
    alpha: float
    n: float
    roots: Roots
    roots_bar: Roots
    v1: BandValue
    v2_band: BandValue
    coef_K: float
    threshold: str = "ratio"
    v2_form: str = "band"

    @property
    def coef_A(self) -> float:
        return self.v1.coef_A

    @property
    def coef_B(self) -> float:
        return self.v1.coef_B

    def v2(self, x, form: str | None = None):
        form = form or self.v2_form
        if form == "band":
            return self.v2_band(x)
        if form == "power_law":
            return v2_eval(x, self.a, self.alpha, self.n, self.roots_bar)
        raise ValueError(f"unknown v2 form {form!r}")

    def total(self, x, form: str | None = None):
        return self.v1(x) + self.v2(x, form)


def solve_gain(model: ValidatedModel, threshold="ratio", v2_form: str = "band") -> GainSolution:
    """Solve the band problem for a validated model.

    ``threshold`` is ``"ratio"`` (root of ``g(1)/g(a/b) = r/c``),
    ``"smooth_fit"`` (``v1''(b) = 0``), ``"gain_argmax"`` (maximiser of
    ``v1 + v2`` at ``x0``) or an explicit ceiling ``b``.
    """
    if model.mode != "analytic":
        raise InvalidParameter("solve_gain needs a model validated in analytic mode")
    a, costs = model.a, model.costs
    r, c = model.r, model.c
    roots = characteristic_roots(model.market, costs.lam)
    roots_bar = characteristic_roots(model.market, costs.lam_bar)
    if threshold == "ratio":
        b = solve_b_star(a, r, c, roots)
    elif threshold == "smooth_fit":
        b = solve_b_smooth_fit(a, r, c, roots)
    elif threshold == "gain_argmax":
        b = gain_argmax_b(model, model.market.x0)
    elif isinstance(threshold, (int, float)):
        b, threshold = float(threshold), "fixed"
    else:
        raise ValueError(f"unknown threshold {threshold!r}")
    g = roots_bar.gamma2
    return GainSolution(
        a=a,
        b_star=b,
        r=r,
        c=c,
        alpha=costs.alpha,
        n=costs.n,
        roots=roots,
        roots_bar=roots_bar,
        v1=solve_band_value(a, b, c, r, roots),
        v2_band=v2_band_value(a, b, costs.alpha, costs.n, roots_bar),
        coef_K=(1.0 - costs.n) * costs.alpha / (g * a ** (g - 1.0)),
        threshold=threshold,
        v2_form=v2_form,
    )


def v1_eval(x, sol: GainSolution):
    return sol.v1(x)


def total_gain(x, sol: GainSolution, v2_form: str | None = None):
    return sol.total(x, v2_form)


def policy_gain(x, policy, model: ValidatedModel):
    """Closed-form gain of any band or floor-only policy (band-consistent second component)."""
    costs = model.costs
    roots = characteristic_roots(model.market, costs.lam)
    roots_bar = characteristic_roots(model.market, costs.lam_bar)
    if isinstance(policy, BandPolicy):
        b = policy.b
    elif isinstance(policy, FloorOnly):
        b = math.inf
    else:
        raise TypeError(f"unsupported policy {policy!r}")
    v1 = solve_band_value(policy.a, b, model.c, model.r, roots)
    v2 = v2_band_value(policy.a, b, costs.alpha, costs.n, roots_bar)
    return float(v1(x) + v2(x))


def cost_from_gain(x, gain, model: ValidatedModel, variant: str = "gbm_corrected"):
    """Cost from gain via ``k = offset(x) - v``.

    ``abm`` uses ``h x / lam + h mu / lam**2``; ``gbm_corrected`` uses
    ``h x / (lam - mu)``, the discounted expected holding of ``X`` itself.
    """
    h, lam, mu = model.costs.h, model.costs.lam, model.market.mu
    x = np.asarray(x, dtype=float)
    if variant == "abm":
        out = h * x / lam + h * mu / lam**2 - gain
    elif variant == "gbm_corrected":
        if not lam > mu:
            raise DiscountBelowDrift(f"gbm offset needs lambda > mu, got {lam:g} <= {mu:g}")
        out = h * x / (lam - mu) - gain
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return out[()] if np.ndim(out) == 0 else out


def central_derivative(fn, x, rel_step: float = 1e-6):
    hx = rel_step * abs(x)
    return (float(fn(x + hx)) - float(fn(x - hx))) / (2.0 * hx)


def generator_residual(
    fn, interval, market: MarketParams, rate: float, grid_n: int = 200, rel_step: float = 1e-4
) -> float:
    """Max of ``|mu x u' + sigma^2/2 x^2 u'' - rate u|`` over ``grid_n`` interior points.

    Derivatives are central differences with step ``rel_step * x``.
    """
    lo, hi = interval
    if grid_n < 3 or not hi > lo:
        raise InvalidGrid(f"need grid_n >= 3 and hi > lo, got {grid_n}, [{lo}, {hi}]")
    x = lo + (hi - lo) * np.arange(1, grid_n + 1) / (grid_n + 1)
    hx = rel_step * x
    up, u0, um = (np.asarray(fn(x + hx), float), np.asarray(fn(x), float), np.asarray(fn(x - hx), float))
    d1 = (up - um) / (2.0 * hx)
    d2 = (up - 2.0 * u0 + um) / hx**2
    res = market.mu * x * d1 + 0.5 * market.sigma**2 * x**2 * d2 - rate * u0
    return float(np.max(np.abs(res)))


def deterministic_gain(model: ValidatedModel, policy, dynamics: str = "additive") -> float:
    """Exact gain of a band (or floor-only) policy when ``sigma = 0``.

    The free path is ``x0 e^{mu t}``; after a possible time-0 jump the
    controlled level drifts to one barrier and is then held there.
    Additive dynamics move ``Z`` by ``dX``; multiplicative ones by ``mu Z dt``.
    """
    mu, x0 = model.market.mu, model.market.x0
    k = model.costs
    r, c, lam, lam_bar = model.r, model.c, k.lam, k.lam_bar
    k2 = (1.0 - k.n) * k.alpha
    a, b = policy.a, policy.b
    gain = 0.0
    if x0 > b:
        gain += r * (x0 - b)
        z0 = b
    elif x0 < a:
        gain -= (c + k2) * (a - x0)
        z0 = a
    else:
        z0 = x0
    if mu == 0:
        return gain
    if dynamics == "additive":
        # Z_t = z0 + x0 (e^{mu t} - 1); after the hit the control absorbs dX = mu x0 e^{mu t} dt
        level = (b if mu > 0 else a) - z0 + x0
        if mu > 0 and not math.isfinite(b):
            return gain
        if level <= 0:
            return gain
        t_hit = max(math.log(level / x0) / mu, 0.0)
        flow = abs(mu) * x0
        if mu > 0:
            return gain + r * flow * math.exp((mu - lam) * t_hit) / (lam - mu)
        return (
            gain
            - c * flow * math.exp((mu - lam) * t_hit) / (lam - mu)
            - k2 * flow * math.exp((mu - lam_bar) * t_hit) / (lam_bar - mu)
        )
    if dynamics != "multiplicative":
        raise ValueError(f"unknown dynamics {dynamics!r}")
    if mu > 0:
        if not math.isfinite(b):
            return gain
        t_hit = math.log(b / z0) / mu
        return gain + r * mu * b * math.exp(-lam * t_hit) / lam
    t_hit = math.log(a / z0) / mu
    flow = -mu * a
    return gain - c * flow * math.exp(-lam * t_hit) / lam - k2 * flow * math.exp(-lam_bar * t_hit) / lam_bar
