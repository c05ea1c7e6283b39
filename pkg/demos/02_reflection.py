"""Two-sided regulator on one GBM path.

The incremental clamp and the sup/inf closed form give the same net
control; complementarity holds exactly on the grid.
"""

import numpy as np

from bankfunds.model import BandPolicy, MarketParams
from bankfunds.paths import Seed, sample_path
from bankfunds.reflection import apply_band, complementarity_sums, net_control_closed_form

market = MarketParams(mu=0.0, sigma=1.0, x0=1.2)
band = BandPolicy(a=1.0, b=1.46)
path = sample_path(market, horizon=5.0, dt=1e-3, seed=Seed(master=7, path_index=0))

cp = apply_band(path, band)
w = net_control_closed_form(path, band)
print(f"nodes: {len(path.values)}")
print(f"free path range: [{path.values.min():.3f}, {path.values.max():.3f}]")
print(f"controlled range: [{cp.z.min():.3f}, {cp.z.max():.3f}]")
print(f"total purchases L_T = {cp.l[-1]:.4f}, total sales U_T = {cp.u[-1]:.4f}")
print(f"max |(L - U) - closed form| = {np.max(np.abs(cp.net - w)):.2e}")
print(f"complementarity sums: {complementarity_sums(cp)}")

# the same band applied in log space (reserves that move like a GBM between interventions)
cpm = apply_band(path, band, dynamics="multiplicative")
print(f"multiplicative: L_T = {cpm.l[-1]:.4f}, U_T = {cpm.u[-1]:.4f}, complementarity {complementarity_sums(cpm)}")

every = len(path.values) // 10
print("\n    t       X       Z       L       U")
for k in range(0, len(path.values), every):
    print(f"{path.times[k]:5.2f}  {path.values[k]:6.3f}  {cp.z[k]:6.3f}  {cp.l[k]:6.3f}  {cp.u[k]:6.3f}")
