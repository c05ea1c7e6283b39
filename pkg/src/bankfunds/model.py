"""Parameter containers, validation and the unit gain/cost rates.

Two discount rates are used throughout: ``lam`` discounts the holding
cost, the sales and the ``n`` share of purchases; ``lam_bar`` (<= ``lam``)
discounts the remaining ``1 - n`` share of purchases.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

from .errors import (
    DegenerateSaleRevenue,
    DiscountBelowDrift,
    DriftWarning,
    InvalidParameter,
    NonPositiveVolatility,
)

__all__ = [
    "MarketParams",
    "CostModel",
    "BandPolicy",
    "FloorOnly",
    "PolicySpec",
    "ValidatedModel",
    "validate",
    "unit_rates",
]


@dataclass(frozen=True)
class MarketParams:
    """Drift, volatility and starting level of the excess-reserve GBM."""

    mu: float
    sigma: float
    x0: float


@dataclass(frozen=True)
class CostModel:
    """Holding rate, proportional purchase/sale costs and discounting."""

    h: float
    alpha: float
    beta: float
    n: float
    lam: float
    lam_bar: float

    @property
    def r(self) -> float:
        return self.h / self.lam - self.beta

    @property
    def c(self) -> float:
        return self.h / self.lam + self.n * self.alpha


@dataclass(frozen=True)
class BandPolicy:
    """Buy at the floor ``a``, sell at the ceiling ``b``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.b > self.a > 0):
            raise InvalidParameter(f"band requires b > a > 0, got a={self.a}, b={self.b}")

    @property
    def tag(self) -> str:
        return "band"


@dataclass(frozen=True)
class FloorOnly:
    """Buy at the floor ``a`` and never sell; a feasible non-band comparison policy."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameter(f"floor requires a > 0, got a={self.a}")

    @property
    def b(self) -> float:
        return math.inf

    @property
    def tag(self) -> str:
        return "floor_only"


PolicySpec = Union[BandPolicy, FloorOnly]


@dataclass(frozen=True)
class ValidatedModel:
    market: MarketParams
    costs: CostModel
    a: float
    mode: str = "analytic"

    @property
    def r(self) -> float:
        return self.costs.r

    @property
    def c(self) -> float:
        return self.costs.c


def unit_rates(costs: CostModel) -> tuple[float, float]:
    """Return ``(r, c)``: unit revenue of a sale and unit cost of a purchase.

    ``r = h/lam - beta`` and ``c = h/lam + n*alpha``; ``c - r = beta + n*alpha >= 0``.
    """
    return costs.r, costs.c


def _basic_violations(market, costs, floor):
    out = []
    if not math.isfinite(market.x0) or market.x0 <= 0:
        out.append(InvalidParameter(f"x0 must be > 0, got {market.x0}"))
    if market.sigma < 0:
        out.append(InvalidParameter(f"sigma must be >= 0, got {market.sigma}"))
    if not costs.h > 0:
        out.append(InvalidParameter(f"h must be > 0, got {costs.h}"))
    if costs.alpha < 0 or costs.beta < 0:
        out.append(InvalidParameter("alpha and beta must be >= 0"))
    if not 0 <= costs.n <= 1:
        out.append(InvalidParameter(f"n must lie in [0, 1], got {costs.n}"))
    if not costs.lam >= costs.lam_bar > 0:
        out.append(
            InvalidParameter(
                f"need lambda >= lambda_bar > 0, got {costs.lam}, {costs.lam_bar}"
            )
        )
    if not floor > 0:
        out.append(InvalidParameter(f"floor a must be > 0, got {floor}"))
    return out


def validate(
    market: MarketParams | ValidatedModel,
    costs: CostModel | None = None,
    floor: float | None = None,
    mode: str = "analytic",
    deterministic: bool = False,
) -> ValidatedModel:
    """Check the standing assumptions and bundle the inputs.

    ``mode="analytic"`` enforces sigma > 0, lambda > mu, lambda_bar > mu and
    r > 0.  ``mode="simulation"`` accepts sigma = 0 when ``deterministic`` is
    set and only warns about lambda <= mu or r <= 0.

    Every violated constraint is collected; the raised exception has the
    class of the first one and carries all of them in ``.violations``.
    Passing an already validated bundle returns it unchanged.
    """
    if isinstance(market, ValidatedModel):
        return market
    if mode not in ("analytic", "simulation"):
        raise ValueError(f"unknown mode {mode!r}")
    if costs is None or floor is None:
        raise TypeError("validate needs market, costs and floor")

    violations = _basic_violations(market, costs, floor)
    r = costs.h / costs.lam - costs.beta if costs.lam > 0 else float("nan")
    if mode == "analytic":
        if market.sigma <= 0:
            violations.append(NonPositiveVolatility("analytic mode requires sigma > 0"))
        if not r > 0:
            violations.append(
                DegenerateSaleRevenue(f"r = h/lambda - beta = {r:g} <= 0; selling never pays")
            )
        if costs.lam <= market.mu or costs.lam_bar <= market.mu:
            violations.append(
                DiscountBelowDrift(
                    f"need lambda and lambda_bar > mu={market.mu:g}, "
                    f"got {costs.lam:g}, {costs.lam_bar:g}"
                )
            )
    else:
        if market.sigma == 0 and not deterministic:
            violations.append(
                NonPositiveVolatility("sigma = 0 requires the deterministic flag")
            )
        if costs.lam_bar <= market.mu:
            warnings.warn(
                "lambda_bar <= mu: discounted functionals may not converge", DriftWarning
            )
        if not r > 0:
            warnings.warn(f"r = {r:g} <= 0: selling never pays", DriftWarning)

    if violations:
        first = violations[0]
        msgs = [str(v) for v in violations]
        raise type(first)("; ".join(msgs), violations=msgs)
    return ValidatedModel(market=market, costs=costs, a=float(floor), mode=mode)

