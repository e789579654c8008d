# Power on a single link
#
# With interference and load held fixed, each link maximizes a log-rate
# utility divided by its share of net power. Newton steps with backtracking
# find the maximizer; we compare with a dense grid.

# %%
import numpy as np

from mmwave_udn import desk_profile
from mmwave_udn.power import link_objective, newton_sweep, qos_floor

cfg = desk_profile()
ipn, g, K, pc, a = 1e-12, 1e-8, 4.0, cfg.circuit_power_w, 0.999
args = (ipn, g, K, pc, a, 0.0, cfg.bandwidth_hz)

# %%
grid = np.geomspace(1e-9, cfg.p_max_small_w, 100_000)
f = link_objective(grid, *args)
print("grid maximizer   ", grid[np.argmax(f)])

p = newton_sweep(1e-4, ipn, g, K, pc, a, 0.0, cfg.bandwidth_hz, cfg.p_max_small_w, n_steps=40)
print("newton maximizer ", float(p))

# %%
# The QoS floor is the power that reaches SINR 2**R - 1 against ipn.
print("floor for 1 bps/Hz", float(qos_floor(ipn, g, cfg.qos_rate)))

# %%
# A positive budget price pulls the optimum down.
for lam in (0.0, 1e9, 1e10):
    p = newton_sweep(1e-4, ipn, g, K, pc, a, lam, cfg.bandwidth_hz, cfg.p_max_small_w, 40)
    print(f"lambda={lam:.0e}  p*={float(p):.3e}")
