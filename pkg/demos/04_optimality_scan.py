"""Perturbation scan around the sale barrier, on common random numbers.

Three candidate barriers are printed first: the root of the ratio equation,
the maximiser of the bonus value v1 (smooth fit) and the maximiser of the
total gain v1 + v2 at x0.  With two discount rates the last one differs from
the v1 maximiser and moves slightly with x0.  The scan is centred on the
total-gain maximiser.

Usage: python 04_optimality_scan.py [n_paths]   (default 10000)
"""

import sys

from bankfunds import analytic as an
from bankfunds.model import CostModel, MarketParams, validate
from bankfunds.montecarlo import SimConfig, optimality_scan

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
model = validate(MarketParams(0.0, 1.0, 1.2), CostModel(1.0, 0.1, 0.1, 0.5, 1.0, 0.8), 1.0)

for name in ("ratio", "smooth_fit", "gain_argmax"):
    sol = an.solve_gain(model, threshold=name)
    print(f"{name:12s} b = {sol.b_star:.6f}  v1 = {float(sol.v1(1.2)):.5f}  total = {float(sol.total(1.2)):.5f}")

b_star = an.solve_gain(model, threshold="gain_argmax").b_star
grid = [f * b_star for f in (0.8, 0.9, 1.1, 1.25)]

for seed in (1, 2):
    rows = optimality_scan(model, grid, b_star, SimConfig(n_paths=n_paths, dt=1e-3, seed=seed))
    print(f"\nseed {seed}")
    print("       b  policy        MC gain   stderr   closed form   diff vs b*  flagged")
    for r in rows:
        e = r.gain_estimate
        mark = "*" if r.is_reference else " "
        print(f"{r.b:8.4f}{mark} {r.policy_tag:11s} {e.mean:9.5f} {e.stderr:8.5f} {r.analytic_gain:12.5f}"
              f" {r.diff_mean:+10.5f}  {r.flagged}")
