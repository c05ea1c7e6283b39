from pathlib import Path

import pytest

from bankfunds.model import CostModel, MarketParams, validate
from bankfunds.scenario import load_scenario

ROOT = Path(__file__).resolve().parents[1]
DEMO = ROOT / "demos" / "scenarios" / "demo.toml"

# filled by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def demo_path():
    return DEMO


@pytest.fixture(scope="session")
def demo_scenario():
    return load_scenario(DEMO)


@pytest.fixture(scope="session")
def demo_market():
    return MarketParams(mu=0.0, sigma=1.0, x0=1.2)


@pytest.fixture(scope="session")
def demo_costs():
    return CostModel(h=1.0, alpha=0.1, beta=0.1, n=0.5, lam=1.0, lam_bar=0.8)


@pytest.fixture(scope="session")
def demo_model(demo_market, demo_costs):
    return validate(demo_market, demo_costs, 1.0)


@pytest.fixture(scope="session")
def demo_sim_model(demo_market, demo_costs):
    return validate(demo_market, demo_costs, 1.0, mode="simulation")


@pytest.fixture
def record():
    """Append one summary line for an acceptance criterion and echo it."""

    def _record(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _record
