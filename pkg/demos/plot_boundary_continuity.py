"""
Angle loss across the representation boundary
=============================================

Boxes are stored long side first with the angle in [-pi/2, pi/2). A box
at -pi/2 + d and one at pi/2 - d are almost the same rectangle, yet their
raw angles sit nearly pi apart. Here we compare what a loss on the raw
angle sees with what the trigonometric angle loss sees.
"""
import math

from obbkit import OBB, encode, tlf_angle_loss
from obbkit.loss import raw_angle_smooth_l1

# %%
# A square target at the lower end of the range, and an anchor at zero.
anchor = OBB(0, 0, 4, 4, 0.0)
target = encode(OBB(0, 0, 4, 4, -math.pi / 2), anchor)

# %%
# Walk the prediction up to the boundary from both sides.
print(f"{'delta':>8} {'tlf(+)':>12} {'tlf(-)':>12} {'raw(+)':>10} {'raw(-)':>10}")
for delta in (0.3, 0.1, 1e-2, 1e-3):
    hi = tlf_angle_loss(target, encode(OBB(0, 0, 4, 4, math.pi / 2 - delta), anchor))
    lo = tlf_angle_loss(target, encode(OBB(0, 0, 4, 4, -math.pi / 2 + delta), anchor))
    rhi = raw_angle_smooth_l1(math.pi / 2 - delta, -math.pi / 2)
    rlo = raw_angle_smooth_l1(-math.pi / 2 + delta, -math.pi / 2)
    print(f"{delta:8.0e} {hi:12.3e} {lo:12.3e} {rhi:10.4f} {rlo:10.4f}")

# %%
# The two TLF columns agree to rounding error while the raw-angle columns
# differ by about pi - 1/2. A regressor trained on the raw angle is pushed
# the long way round for a box that is already nearly correct.
