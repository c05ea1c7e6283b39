"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section of the
pytest terminal summary.
"""

import math
import time

import pytest

from bankfunds import analytic as an
from bankfunds import checks
from bankfunds.cli import run
from bankfunds.model import BandPolicy, CostModel, MarketParams, validate
from bankfunds.montecarlo import SimConfig, estimate, estimate_gain, optimality_scan, verify_identity


def test_c01_root_correctness(demo_model, record):
    t0 = time.perf_counter()
    res = checks.root_checks(demo_model, 1000, 1e-12, seed=1)
    elapsed = time.perf_counter() - t0
    worst = max(c.value for c in res)
    ok = all(c.passed for c in res) and elapsed < 1.0
    record(1, ok, f"max residual {worst:.2e} over 1000 draws, {elapsed:.2f}s")
    assert ok


def test_c02_g_structure(demo_model, record):
    res = checks.g_checks(demo_model, 1000, seed=1)
    ok = all(c.passed for c in res)
    record(2, ok, f"max |g'(1)| {res[0].value:.1e}; {res[1].detail}")
    assert ok


def test_c03_smooth_pasting(demo_model, record):
    sol = an.solve_gain(demo_model)
    demo = checks.pasting_checks(sol, 1e-8)
    v1 = [c for c in demo if c.name.startswith("pasting_v1")]
    rand = checks.random_pasting_check(100, 1e-8, seed=1)
    ok = all(c.passed for c in v1) and rand.passed
    worst = max(c.value for c in v1)
    record(3, ok, f"demo max {worst:.1e}, 100 random scenarios max {rand.value:.1e}")
    assert ok


def test_c04_generator_equation(demo_model, record):
    sol = an.solve_gain(demo_model)
    res = checks.generator_checks(demo_model, sol, 1e-6)
    ok = all(c.passed for c in res)
    record(4, ok, ", ".join(f"{c.name} {c.value:.1e}" for c in res))
    assert ok


def test_c05_threshold_consistency(demo_model, demo_scenario, record):
    res, values = checks.threshold_checks(demo_model, demo_scenario.verify)
    by = {c.name: c for c in res}
    eq = by["threshold_equation_vs_argmax"]
    foc = by["argmax_first_order_condition"]
    if eq.passed:
        ok = True
        detail = f"threshold equation matches argmax, rel gap {eq.value:.1e}"
    else:
        # the alternative branch: the report flags the equation and the argmax meets the FOC
        ok = "DISCREPANT" in eq.detail and foc.value < 1e-6 and by["argmax_invariance_over_x"].passed
        detail = (
            f"1e-4 match NOT met (rel gap {eq.value:.3e}, b_eq {values['b_equation']:.6f} vs "
            f"argmax {values['b_argmax']:.6f}); flagged DISCREPANT, argmax FOC {foc.value:.1e} < 1e-6"
        )
    record(5, ok, detail)
    assert ok


def test_c06_skorokhod_equivalence(record):
    t0 = time.perf_counter()
    res = checks.skorokhod_checks(1000, 10_000, 1e-10, seed=6)
    elapsed = time.perf_counter() - t0
    ok = all(c.passed for c in res) and elapsed < 30
    worst = max(res[0].value, res[1].value)
    record(6, ok, f"max |diff| {worst:.1e}, complementarity {res[2].value}, {elapsed:.1f}s")
    assert ok


def test_c07_monte_carlo_vs_closed_form(demo_sim_model, demo_model, record):
    sol = an.solve_gain(demo_model)
    t0 = time.perf_counter()
    est = estimate(demo_sim_model, BandPolicy(1.0, sol.b_star), SimConfig(n_paths=100_000, dt=1e-3, seed=20240611))
    elapsed = time.perf_counter() - t0
    ref = float(sol.total(1.2))
    diff = est.mean - ref
    ok = abs(diff) < 3 * est.stderr and elapsed < 300 and est.tail_bound <= 1e-4 * (1 + 1e-9)
    record(7, ok, f"MC {est.mean:.5f} +/- {est.stderr:.5f} vs closed form {ref:.5f}, "
                  f"z = {diff / est.stderr:.2f}, {elapsed:.0f}s")
    assert ok


def test_c08_deterministic_oracle(record):
    m = validate(MarketParams(0.1, 0.0, 1.0), CostModel(0.5, 0.1, 0.0, 1.0, 0.5, 0.5), 0.5,
                 mode="simulation", deterministic=True)
    assert m.r == 1.0
    est = estimate_gain(BandPolicy(0.5, 2.0), m, 2, None, 1e-4, 8, dynamics="additive", tail_cap=1e-8)
    err = abs(est.mean - 0.015625)
    ok = err < 1e-6
    record(8, ok, f"gain {est.mean!r}, abs error {err:.1e}")
    assert ok


@pytest.mark.parametrize("seed", [101, 202])
def test_c09_optimality_perturbation(demo_model, record, seed):
    sol = an.solve_gain(demo_model)
    grid = [f * sol.b_star for f in (0.8, 0.9, 1.0, 1.1, 1.25)]
    rows = optimality_scan(demo_model, grid, sol.b_star, SimConfig(n_paths=20_000, dt=1e-3, seed=seed))
    ref = next(r for r in rows if r.is_reference)
    ok = not any(r.flagged for r in rows) and any(r.policy_tag == "floor_only" for r in rows)
    margin = max(
        (r.gain_estimate.mean - ref.gain_estimate.mean) / math.hypot(r.gain_estimate.stderr, ref.gain_estimate.stderr)
        for r in rows
        if not r.is_reference
    )
    record(9, ok, f"seed {seed}: no row beats b* by > 3 SE (largest margin {margin:+.2f} SE)")
    assert ok


def test_c10_cost_gain_identity(demo_sim_model, record):
    cases = []
    m = validate(MarketParams(0.05, 0.2, 1.0), CostModel(1.0, 0.1, 0.1, 0.5, 0.5, 0.4), 0.8, mode="simulation")
    ma = validate(m.market, m.costs, 0.8)
    b = an.solve_gain(ma).b_star
    cfg = SimConfig(n_paths=10_000, dt=1e-3, seed=10, dynamics="additive", boundary_correction=False)
    cases.append(("mu=0.05", verify_identity(m, BandPolicy(0.8, b), cfg)))
    demo_cfg = SimConfig(n_paths=5_000, dt=1e-3, seed=11, dynamics="additive", boundary_correction=False)
    cases.append(("demo", verify_identity(demo_sim_model, BandPolicy(1.0, 1.5), demo_cfg)))
    ok = True
    parts = []
    for name, rep in cases:
        ok &= rep.definition.passes() and rep.gbm_offset.passes()
        parts.append(f"{name}: (i) {rep.definition.estimate.mean:.1e}, (iii) {rep.gbm_offset.estimate.mean:+.4f}"
                     f" +/- {rep.gbm_offset.estimate.stderr:.4f}")
    abm = cases[0][1].abm_offset.estimate
    parts.append(f"(ii) at mu=0.05: {abm.mean:+.4f} +/- {abm.stderr:.4f} (reported)")
    record(10, ok, "; ".join(parts))
    assert ok


def test_c11_reproducibility(demo_path, tmp_path, record):
    commands = {
        "analytic": ["analytic.csv", "analytic_checks.csv", "analytic_summary.csv"],
        "simulate": ["simulate.csv"],
        "scan": ["scan_table.csv", "scan_long.csv"],
        "verify": ["verify.csv"],
    }
    opts = {"analytic": [], "simulate": ["--paths", "1000", "--dt", "0.01"],
            "scan": ["--paths", "1000", "--dt", "0.01"], "verify": ["--paths", "1000"]}
    mismatched = []
    for cmd, files in commands.items():
        runs = [("a", "1"), ("b", "1"), ("c", "3")]
        for label, workers in runs:
            code = run([cmd, str(demo_path), "--out", str(tmp_path / cmd / label), "--workers", workers] + opts[cmd])
            assert code == 0, (cmd, code)
        for f in files + [f"manifest_{cmd}.json"]:
            ref = (tmp_path / cmd / "a" / f).read_bytes()
            for label, _ in runs[1:]:
                if (tmp_path / cmd / label / f).read_bytes() != ref:
                    mismatched.append(f"{cmd}/{f}")
    ok = not mismatched
    record(11, ok, "4 commands x 3 runs (workers 1, 1, 3): " + ("all CSV byte-identical" if ok else str(mismatched)))
    assert ok
