import math

import pytest

from bankfunds.errors import (
    DegenerateSaleRevenue,
    DiscountBelowDrift,
    InvalidParameter,
    NonPositiveVolatility,
)
from bankfunds.model import BandPolicy, CostModel, FloorOnly, MarketParams, unit_rates, validate


def costs(**kw):
    base = dict(h=1.0, alpha=0.5, beta=0.5, n=1.0, lam=0.5, lam_bar=0.5)
    base.update(kw)
    return CostModel(**base)


def test_valid_example_has_positive_r():
    m = validate(MarketParams(0.0, 1.0, 1.0), costs(), 1.0)
    assert m.r == pytest.approx(1.5)
    assert m.mode == "analytic"


@pytest.mark.parametrize(
    "kw, r, c",
    [
        (dict(h=1, lam=0.5, beta=0.5, n=1, alpha=0.5), 1.5, 2.5),
        (dict(h=1, lam=1, beta=0, n=0, alpha=7, lam_bar=1), 1.0, 1.0),
        (dict(h=2, lam=1, beta=0.5, n=0.5, alpha=1, lam_bar=1), 1.5, 2.5),
    ],
)
def test_unit_rates(kw, r, c):
    assert unit_rates(costs(**kw)) == pytest.approx((r, c))


def test_c_minus_r_is_exact():
    k = costs(h=1.3, lam=0.7, beta=0.2, n=0.3, alpha=0.9, lam_bar=0.4)
    r, c = unit_rates(k)
    assert c - r == pytest.approx(k.beta + k.n * k.alpha, abs=1e-15)
    assert c >= r


def test_negative_r_rejected():
    with pytest.raises(DegenerateSaleRevenue):
        validate(MarketParams(0.0, 1.0, 1.0), costs(h=1, lam=1, beta=2, lam_bar=1), 1.0)


def test_discount_below_drift():
    with pytest.raises(DiscountBelowDrift):
        validate(MarketParams(1.0, 1.0, 1.0), costs(lam=0.5, lam_bar=0.5), 1.0)


def test_zero_sigma_rules():
    m = MarketParams(0.1, 0.0, 1.0)
    with pytest.raises(NonPositiveVolatility):
        validate(m, costs(), 1.0)
    with pytest.raises(NonPositiveVolatility):
        validate(m, costs(), 1.0, mode="simulation")
    assert validate(m, costs(), 1.0, mode="simulation", deterministic=True).mode == "simulation"


def test_all_violations_collected():
    with pytest.raises(InvalidParameter) as info:
        validate(MarketParams(0.0, 1.0, -1.0), costs(n=2.0, lam_bar=5.0), -1.0)
    assert len(info.value.violations) >= 4


def test_validate_idempotent():
    m = validate(MarketParams(0.0, 1.0, 1.0), costs(), 1.0)
    assert validate(m) is m


def test_policies():
    with pytest.raises(InvalidParameter):
        BandPolicy(2.0, 1.0)
    with pytest.raises(InvalidParameter):
        FloorOnly(0.0)
    assert math.isinf(FloorOnly(1.0).b)
    assert BandPolicy(1.0, 2.0).tag == "band" and FloorOnly(1.0).tag == "floor_only"
