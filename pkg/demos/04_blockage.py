# Blockage and 13 dBi antennas
#
# Shadowed LOS/NLOS path loss makes far links much weaker, which isolates
# cells. The energy-efficiency gap against MAX-SINR widens.

# %%
import warnings

from mmwave_udn import (blockage_profile, build_gain_matrix, desk_profile, generate_topology,
                        run_max_sinr, run_solver)

for name, cfg in (("free space", desk_profile()), ("blockage", blockage_profile())):
    topo = generate_topology(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        G = build_gain_matrix(topo, cfg)
    state, rep = run_solver(topo, G, cfg)
    _, base = run_max_sinr(topo, G, cfg)
    print(f"{name:10s} EE ratio {rep.aggregate_ee / base.aggregate_ee:6.1f}x  "
          f"iterations {state.iteration}")

# %%
# Turning shadowing off gives a repeatable mean path loss, handy for checks.
cfg = blockage_profile(deterministic=True)
print(cfg.blockage.deterministic_shadowing)
