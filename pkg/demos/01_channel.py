# Link gains in a dense small-cell drop
#
# A scenario is a frozen config plus a seeded topology. Gains come from the
# free-space model unless the blockage model is switched on.

# %%
import warnings

import numpy as np

from mmwave_udn import blockage_profile, build_gain_matrix, desk_profile, generate_topology
from mmwave_udn.channel import blockage_path_loss_db, friis_gain

cfg = desk_profile()
topo = generate_topology(cfg)
print(topo.n_bs, "base stations,", topo.n_users, "users")

# %%
# Free-space gain falls 20 dB per decade with the default exponent of 2.
d = np.array([1.0, 10.0, 100.0])
print(10 * np.log10(friis_gain(d, cfg)))

# %%
# With blockage on, links beyond 25 m switch to the NLOS exponent.
blk_cfg = blockage_profile()
d = np.array([5.0, 25.0, 26.0, 80.0])
print(blockage_path_loss_db(d, "bs_user", blk_cfg.blockage, blk_cfg))

# %%
# The gain matrix holds every user-BS and BS-BS pair.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)   # a few users land inside 1 m of a BS
    G = build_gain_matrix(topo, cfg)
print(G.user_bs.shape, G.bs_bs.shape)
best = np.argmax(G.user_bs, axis=1)
print("users whose strongest link is the macro:", int((best == 0).sum()))
