import math

import numpy as np
import pytest

from bankfunds import analytic as an
from bankfunds.errors import HorizonTooShort
from bankfunds.model import BandPolicy, CostModel, FloorOnly, MarketParams, ValidatedModel, validate
from bankfunds.montecarlo import (
    MCEstimate,
    SimConfig,
    default_horizon,
    discounted_stieltjes,
    estimate,
    estimate_cost,
    estimate_gain,
    optimality_scan,
    simulate_functionals,
    tail_bound,
    verify_identity,
)


def test_stieltjes_examples():
    inc = np.zeros(101)
    inc[0] = 1.0
    assert discounted_stieltjes(inc, 3.0, 0.01) == 1.0
    assert discounted_stieltjes(np.zeros(50), 1.0, 0.1) == 0.0
    dt, rate, c = 1e-3, 0.7, 2.0
    inc = np.full(10_001, c * dt)
    inc[0] = 0.0
    T = 10.0
    exact = c * (1 - math.exp(-rate * T)) / rate
    assert abs(discounted_stieltjes(inc, rate, dt) - exact) < 2 * rate * dt * exact


def det_model(**kw):
    costs = dict(h=0.5, alpha=0.1, beta=0.0, n=1.0, lam=0.5, lam_bar=0.5)
    costs.update(kw.pop("costs", {}))
    market = dict(mu=0.1, sigma=0.0, x0=1.0)
    market.update(kw)
    return validate(MarketParams(**market), CostModel(**costs), 0.5, mode="simulation", deterministic=True)


def test_deterministic_gain_oracle():
    m = det_model()
    est = estimate_gain(BandPolicy(0.5, 2.0), m, 2, None, 1e-3, 1, dynamics="additive", tail_cap=1e-8)
    assert est.stderr == 0.0
    # left-point rule: O(dt) relative
    assert abs(est.mean - 0.015625) < 0.5 * 1e-3 * 0.015625 * 2


@pytest.mark.parametrize("dynamics", ["additive", "multiplicative"])
def test_deterministic_both_dynamics(dynamics):
    m = det_model(mu=-0.1, costs=dict(n=0.5, lam_bar=0.4, beta=0.05))
    est = estimate_gain(BandPolicy(0.5, 2.0), m, 2, None, 1e-3, 1, dynamics=dynamics, tail_cap=1e-8)
    ref = an.deterministic_gain(m, BandPolicy(0.5, 2.0), dynamics)
    assert est.mean == pytest.approx(ref, rel=2e-3)


def test_cost_without_control():
    m = det_model(mu=0.0, costs=dict(alpha=0.0, beta=0.0))
    T, dt = 5.0, 1e-3
    est = estimate_cost(BandPolicy(0.5, 2.0), m, 2, T, dt, 1, dynamics="additive", tail_cap=1.0)
    exact = 0.5 * 1.0 * (1 - math.exp(-0.5 * T)) / 0.5
    assert abs(est.mean - exact) < 0.5 * dt


def test_zero_holding_cost_without_hits_is_zero():
    m = ValidatedModel(MarketParams(0.0, 0.0, 1.0), CostModel(0.0, 0.1, 0.1, 0.5, 0.5, 0.5), 0.5, "simulation")
    est = estimate_cost(BandPolicy(0.5, 2.0), m, 2, 5.0, 0.01, 1, dynamics="additive", tail_cap=1.0)
    assert est.mean == 0.0


def test_horizon_too_short(demo_sim_model):
    with pytest.raises(HorizonTooShort):
        estimate_gain(BandPolicy(1.0, 1.5), demo_sim_model, 10, 1.0, 0.01, 1)


def test_default_horizon_meets_cap(demo_sim_model):
    T = default_horizon(demo_sim_model, 1e-4)
    assert tail_bound(demo_sim_model, T) == pytest.approx(1e-4)
    assert T == pytest.approx(math.log(1e4) / 0.8)


def quick_cfg(**kw):
    base = dict(n_paths=600, dt=0.01, seed=99, tail_cap=1e-2)
    base.update(kw)
    return SimConfig(**base)


def test_worker_count_does_not_change_results(demo_sim_model):
    pol = [BandPolicy(1.0, 1.5), FloorOnly(1.0)]
    one = simulate_functionals(demo_sim_model, pol, quick_cfg(workers=1, chunk_size=64))
    many = simulate_functionals(demo_sim_model, pol, quick_cfg(workers=4, chunk_size=64))
    for p1, p2 in zip(one, many):
        for f in ("l", "u", "l_bar", "hold_z", "hold_x"):
            assert getattr(p1, f).tobytes() == getattr(p2, f).tobytes()


def test_common_random_numbers(demo_sim_model):
    res = simulate_functionals(demo_sim_model, [BandPolicy(1.0, 1.3), BandPolicy(1.0, 1.8)], quick_cfg())
    assert res[0].hold_x.tobytes() == res[1].hold_x.tobytes()


def test_stderr_scaling(demo_sim_model):
    small = estimate(demo_sim_model, BandPolicy(1.0, 1.5), quick_cfg(n_paths=1000))
    big = estimate(demo_sim_model, BandPolicy(1.0, 1.5), quick_cfg(n_paths=4000))
    assert 0.8 * 0.5 <= big.stderr / small.stderr <= 1.2 * 0.5


def test_mc_matches_v1_at_midpoint():
    # single-rate model, start midway in the band
    costs = CostModel(1.0, 0.1, 0.1, 1.0, 1.0, 0.8)
    am = validate(MarketParams(0.0, 1.0, 1.0), costs, 1.0)
    sol = an.solve_gain(am)
    x_mid = 0.5 * (1.0 + sol.b_star)
    sm = validate(MarketParams(0.0, 1.0, x_mid), costs, 1.0, mode="simulation")
    est = estimate_gain(BandPolicy(1.0, sol.b_star), sm, 8000, None, 2e-3, 5)
    assert abs(est.mean - float(sol.v1(x_mid))) < 3 * est.stderr


def test_dt_refinement(demo_sim_model):
    band = BandPolicy(1.0, 1.5)
    e1 = estimate(demo_sim_model, band, quick_cfg(n_paths=3000, dt=0.02))
    e2 = estimate(demo_sim_model, band, quick_cfg(n_paths=3000, dt=0.01))
    allowance = 0.05 * math.sqrt(0.02)
    assert abs(e1.mean - e2.mean) < 3 * math.hypot(e1.stderr, e2.stderr) + allowance


def test_identity_definition_residual_is_exact():
    m = validate(MarketParams(0.05, 0.2, 1.0), CostModel(1.0, 0.1, 0.1, 0.5, 0.5, 0.4), 0.8, mode="simulation")
    rep = verify_identity(m, BandPolicy(0.8, 1.2), SimConfig(400, 0.01, 3, tail_cap=1e-3, dynamics="additive",
                                                             boundary_correction=False))
    assert abs(rep.definition.estimate.mean) < 1e-12
    assert rep.definition.passes()
    assert rep.dynamics == "additive"


def test_scan_injects_reference_and_floor(demo_model):
    rows = optimality_scan(demo_model, [1.3, 1.7], 1.5, quick_cfg(n_paths=300))
    assert [r.b for r in rows[:3]] == [1.3, 1.5, 1.7]
    assert rows[1].is_reference and rows[1].diff_mean == 0.0
    assert rows[-1].policy_tag == "floor_only" and math.isinf(rows[-1].b)
    assert not any(r.flagged for r in rows)


def test_mcestimate_from_samples():
    e = MCEstimate.from_samples([1.0, 2.0, 3.0], 1.0, 0.1, 0.0)
    assert e.mean == 2.0 and e.stderr == pytest.approx(1 / math.sqrt(3))
    assert e.z_score(2.0) == 0.0
