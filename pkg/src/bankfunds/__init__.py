"""Band (barrier) policies for a bank's excess reserves driven by a GBM.

Closed-form gain and threshold computations live in :mod:`bankfunds.analytic`,
path simulation and the two-sided regulator in :mod:`bankfunds.paths` and
:mod:`bankfunds.reflection`, Monte Carlo estimators in
:mod:`bankfunds.montecarlo`.
"""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    characteristic_roots,
    cost_from_gain,
    deterministic_gain,
    policy_gain,
    solve_b_smooth_fit,
    solve_b_star,
    solve_gain,
    total_gain,
)
from .errors import (  # noqa: E402
    DegenerateBand,
    DegenerateSaleRevenue,
    DiscountBelowDrift,
    HorizonTooShort,
    InvalidGrid,
    InvalidParameter,
    ModelError,
    NonPositiveArgument,
    NonPositiveVolatility,
    ScenarioError,
    SingularSystem,
)
from .model import BandPolicy, CostModel, FloorOnly, MarketParams, validate  # noqa: E402
from .montecarlo import SimConfig, estimate_cost, estimate_gain, optimality_scan, verify_identity  # noqa: E402
from .paths import Seed, sample_path, sample_paths  # noqa: E402
from .reflection import apply_band, net_control_closed_form  # noqa: E402
