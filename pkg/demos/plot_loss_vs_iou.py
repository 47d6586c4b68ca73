"""
How closely the angle loss tracks 1 - IoU
=========================================

For elongated boxes the IoU collapses fast as the angle error grows. The
angle loss is scaled by sqrt(w/h), so its ranking of predictions should
follow the IoU ranking. We sweep the predicted angle and compare ranks.
"""
import math

import numpy as np

from obbkit import loss_sweep

# %%
# ``loss_sweep`` returns (theta_p, tlf, 1 - IoU) rows over a uniform grid.
rows = np.array(loss_sweep(theta_g=0.0, ar=5.0, grid_n=360))
theta_p, tlf, omi = rows.T

# %%
# A few samples along the curve. Both columns rise from zero at theta_p = 0.
for k in range(180, 360, 30):
    print(f"theta_p={math.degrees(theta_p[k]):6.1f} deg  tlf={tlf[k]:.4f}  1-IoU={omi[k]:.4f}")

# %%
# Rank agreement on the half-range (0, pi/2]. ``argsort`` twice gives ranks.
m = (theta_p > 0) & (theta_p <= math.pi / 2)
ra, rb = np.argsort(np.argsort(tlf[m])), np.argsort(np.argsort(omi[m]))
rho = np.corrcoef(ra, rb)[0, 1]
print(f"rank correlation over (0, pi/2]: {rho:.5f}")

# %%
# Writing the same sweep to CSV for an external plotting tool:
#
#     obbkit loss-sweep --theta-g 0 --ar 5 --grid 1000 --out sweep.csv
