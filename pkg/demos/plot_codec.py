"""
Encoding boxes against anchors
==============================

Offsets are measured in the anchor's own frame: centre shifts are rotated
into it and divided by the anchor sides, sizes become log ratios, and the
angle difference is stored as a (sin, cos) pair.
"""
import math

from obbkit import OBB, canonicalize, decode, encode

anchor = OBB(50, 40, 30, 10, 0.3)
gt = OBB(54, 43, 36, 9, 0.5)

# %%
d = encode(gt, anchor)
for name, v in d._asdict().items():
    print(f"{name:>6} = {v:+.6f}")
print("angle difference:", math.atan2(d.t_sin, d.t_cos), "vs", gt.theta - anchor.theta)

# %%
# Decoding gives back (x, y, w, h, sin, cos). ``canonicalize`` turns that
# into a long-side-first box, normalising the (sin, cos) pair first, so a
# raw network output can be fed straight in.
b6 = decode(d, anchor)
print(canonicalize(b6))

# %%
# A prediction whose (sin, cos) has drifted off the unit circle still
# decodes to the same rectangle.
scaled = d._replace(t_sin=3 * d.t_sin, t_cos=3 * d.t_cos)
print(canonicalize(decode(scaled, anchor)))
