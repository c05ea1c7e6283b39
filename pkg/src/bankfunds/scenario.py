"""Scenario files: TOML with a closed set of sections and keys.

Unknown sections or keys are errors.  A seed is mandatory; nothing reads
entropy from the environment.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ScenarioError
from .model import CostModel, MarketParams, ValidatedModel, validate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "Scenario",
    "SimulationBlock",
    "ScanBlock",
    "OutputBlock",
    "VerifyBlock",
    "AnalyticBlock",
    "load_scenario",
    "parse_scenario",
]

_REQUIRED = object()

# section -> key -> (type, default); _REQUIRED marks mandatory keys
SCHEMA = {
    "market": {"mu": (float, _REQUIRED), "sigma": (float, _REQUIRED), "x0": (float, _REQUIRED)},
    "costs": {
        "h": (float, _REQUIRED),
        "alpha": (float, _REQUIRED),
        "beta": (float, _REQUIRED),
        "n": (float, _REQUIRED),
        "lambda": (float, _REQUIRED),
        "lambda_bar": (float, _REQUIRED),
    },
    "band": {
        "a": (float, _REQUIRED),
        "b": (float, None),
        "threshold": (str, "ratio"),
        "v2_form": (str, "band"),
    },
    "simulation": {
        "seed": (int, _REQUIRED),
        "n_paths": (int, 100_000),
        "dt": (float, 1e-3),
        "horizon": (float, None),
        "tail_cap": (float, 1e-4),
        "workers": (int, 1),
        "dynamics": (str, "multiplicative"),
        "boundary_correction": (bool, True),
        "identity_dynamics": (str, "additive"),
    },
    "scan": {
        "factors": (list, [0.8, 0.9, 1.0, 1.1, 1.25]),
        "b_values": (list, []),
        "include_floor": (bool, True),
    },
    "analytic": {
        "x_min": (float, None),
        "x_max": (float, None),
        "x_points": (int, 41),
    },
    "verify": {
        "skorokhod_paths": (int, 200),
        "skorokhod_steps": (int, 10_000),
        "identity_paths": (int, 20_000),
        "random_draws": (int, 1000),
        "random_scenarios": (int, 100),
        "root_tol": (float, 1e-12),
        "pasting_tol": (float, 1e-8),
        "generator_tol": (float, 1e-6),
        "equivalence_tol": (float, 1e-10),
        "argmax_tol": (float, 1e-4),
        "foc_tol": (float, 1e-6),
        "invariance_tol": (float, 1e-6),
    },
    "output": {"directory": (str, "out"), "formats": (list, ["csv", "json"])},
}

_OPTIONAL_SECTIONS = {"scan", "analytic", "verify", "output"}


@dataclass(frozen=True)
class SimulationBlock:
    seed: int
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float | None = None
    tail_cap: float = 1e-4
    workers: int = 1
    dynamics: str = "multiplicative"
    boundary_correction: bool = True
    identity_dynamics: str = "additive"


@dataclass(frozen=True)
class ScanBlock:
    factors: tuple = (0.8, 0.9, 1.0, 1.1, 1.25)
    b_values: tuple = ()
    include_floor: bool = True


@dataclass(frozen=True)
class AnalyticBlock:
    x_min: float | None = None
    x_max: float | None = None
    x_points: int = 41


@dataclass(frozen=True)
class VerifyBlock:
    skorokhod_paths: int = 200
    skorokhod_steps: int = 10_000
    identity_paths: int = 20_000
    random_draws: int = 1000
    random_scenarios: int = 100
    root_tol: float = 1e-12
    pasting_tol: float = 1e-8
    generator_tol: float = 1e-6
    equivalence_tol: float = 1e-10
    argmax_tol: float = 1e-4
    foc_tol: float = 1e-6
    invariance_tol: float = 1e-6


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class Scenario:
    market: MarketParams
    costs: CostModel
    a: float
    simulation: SimulationBlock
    b: float | None = None
    threshold: str = "ratio"
    v2_form: str = "band"
    scan: ScanBlock = field(default_factory=ScanBlock)
    analytic: AnalyticBlock = field(default_factory=AnalyticBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    source: str = "<memory>"

    def model(self, mode: str = "analytic") -> ValidatedModel:
        deterministic = mode == "simulation" and self.market.sigma == 0
        return validate(self.market, self.costs, self.a, mode=mode, deterministic=deterministic)

    def with_overrides(self, *, out=None, workers=None, dt=None, paths=None) -> "Scenario":
        sim = self.simulation
        sim = replace(
            sim,
            workers=sim.workers if workers is None else int(workers),
            dt=sim.dt if dt is None else float(dt),
            n_paths=sim.n_paths if paths is None else int(paths),
        )
        output = self.output if out is None else replace(self.output, directory=str(out))
        return replace(self, simulation=sim, output=output)

    def canonical(self) -> dict:
        """Parameters that determine results (worker count and output location excluded)."""
        d = asdict(self)
        d.pop("source")
        d.pop("output")
        d["simulation"].pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=_json_default)
        return hashlib.sha256(blob.encode()).hexdigest()


def _json_default(obj):
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(type(obj))


def _coerce(section, key, value, typ):
    where = f"[{section}].{key}"
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{where} must be a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ScenarioError(f"{where} must be finite")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{where} must be an integer, got {value!r}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{where} must be true/false, got {value!r}")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{where} must be a string, got {value!r}")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ScenarioError(f"{where} must be an array, got {value!r}")
        return tuple(value)
    raise AssertionError(typ)


def _section(raw, name):
    spec = SCHEMA[name]
    given = raw.get(name, {})
    if not isinstance(given, dict):
        raise ScenarioError(f"[{name}] must be a table")
    unknown = sorted(set(given) - set(spec))
    if unknown:
        raise ScenarioError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    out = {}
    for key, (typ, default) in spec.items():
        if key in given:
            out[key] = _coerce(name, key, given[key], typ)
        elif default is _REQUIRED:
            raise ScenarioError(f"missing required key [{name}].{key}")
        else:
            out[key] = tuple(default) if isinstance(default, list) else default
    return out


def parse_scenario(raw: dict, source: str = "<memory>") -> Scenario:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ScenarioError(f"unknown section(s): {', '.join(unknown)}")
    for name in SCHEMA:
        if name not in raw and name not in _OPTIONAL_SECTIONS:
            raise ScenarioError(f"missing section [{name}]")
    mk = _section(raw, "market")
    ck = _section(raw, "costs")
    bd = _section(raw, "band")
    sim = _section(raw, "simulation")
    if bd["threshold"] not in ("ratio", "smooth_fit", "gain_argmax"):
        raise ScenarioError("[band].threshold must be 'ratio', 'smooth_fit' or 'gain_argmax'")
    if bd["v2_form"] not in ("band", "power_law"):
        raise ScenarioError("[band].v2_form must be 'band' or 'power_law'")
    for key in ("dynamics", "identity_dynamics"):
        if sim[key] not in ("additive", "multiplicative"):
            raise ScenarioError(f"[simulation].{key} must be 'additive' or 'multiplicative'")
    if sim["n_paths"] < 2 or sim["workers"] < 1:
        raise ScenarioError("[simulation] needs n_paths >= 2 and workers >= 1")
    out = _section(raw, "output")
    bad = set(out["formats"]) - {"csv", "json"}
    if bad:
        raise ScenarioError(f"[output].formats: unsupported {sorted(bad)}")
    return Scenario(
        market=MarketParams(**mk),
        costs=CostModel(
            h=ck["h"], alpha=ck["alpha"], beta=ck["beta"], n=ck["n"],
            lam=ck["lambda"], lam_bar=ck["lambda_bar"],
        ),
        a=bd["a"],
        b=bd["b"],
        threshold=bd["threshold"],
        v2_form=bd["v2_form"],
        simulation=SimulationBlock(**sim),
        scan=ScanBlock(**_section(raw, "scan")),
        analytic=AnalyticBlock(**_section(raw, "analytic")),
        verify=VerifyBlock(**_section(raw, "verify")),
        output=OutputBlock(**out),
        source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    try:
        return parse_scenario(raw, source=str(path))
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
