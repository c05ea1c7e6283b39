import pytest

from bankfunds.errors import ScenarioError
from bankfunds.scenario import load_scenario, parse_scenario

BASE = {
    "market": {"mu": 0.0, "sigma": 1.0, "x0": 1.2},
    "costs": {"h": 1.0, "alpha": 0.1, "beta": 0.1, "n": 0.5, "lambda": 1.0, "lambda_bar": 0.8},
    "band": {"a": 1.0},
    "simulation": {"seed": 1},
}


def raw(**patch):
    out = {k: dict(v) for k, v in BASE.items()}
    for section, values in patch.items():
        out.setdefault(section, {}).update(values)
    return out


def test_defaults():
    s = parse_scenario(raw())
    assert s.simulation.n_paths == 100_000 and s.simulation.dt == 1e-3 and s.simulation.tail_cap == 1e-4
    assert s.scan.factors == (0.8, 0.9, 1.0, 1.1, 1.25) and s.scan.include_floor
    assert s.costs.lam_bar == 0.8 and s.b is None


def test_demo_file_loads(demo_scenario):
    assert demo_scenario.market.x0 == 1.2 and demo_scenario.simulation.seed == 20240611


@pytest.mark.parametrize(
    "patch",
    [
        {"market": {"drift": 1.0}},
        {"extra": {"x": 1}},
        {"simulation": {"seed": 1.5}},
        {"band": {"threshold": "other"}},
        {"simulation": {"dynamics": "euler"}},
        {"output": {"formats": ["xml"]}},
        {"costs": {"h": "one"}},
    ],
)
def test_rejects_bad_input(patch):
    with pytest.raises(ScenarioError):
        parse_scenario(raw(**patch))


def test_seed_required():
    r = raw()
    del r["simulation"]["seed"]
    with pytest.raises(ScenarioError, match="seed"):
        parse_scenario(r)


def test_digest_ignores_workers_and_output():
    s = parse_scenario(raw())
    assert s.digest() == s.with_overrides(workers=8, out="elsewhere").digest()
    assert s.digest() != s.with_overrides(dt=0.01).digest()
    assert s.with_overrides(paths=10).simulation.n_paths == 10


def test_toml_errors(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[market\n")
    with pytest.raises(ScenarioError):
        load_scenario(p)
