"""
A conformer-style detection head in numpy
=========================================

The head splits its channel budget three ways: a quarter from a plain 3x3
convolution, a quarter from a dilated 3x3 convolution, and half from
multi-head self-attention over all spatial positions. Two 1x1 projections
turn the fused map into class scores and six regression offsets per
anchor.
"""
import numpy as np

from obbkit.head import conformer_features, conformer_forward, conv2d, init_head_params, mhsa

params = init_head_params(64, n_heads=4, num_anchors=2, seed=0)
x = np.random.default_rng(1).normal(size=(1, 64, 12, 12))

# %%
fused = conformer_features(x, params)
cls, reg = conformer_forward(x, params)
print("fused", fused.shape, "cls", cls.shape, "reg", reg.shape)

# %%
# The fused map is a plain concatenation, so each slice is its branch.
q = 64 // 4
print(np.array_equal(fused[:, :q], conv2d(x, params.conv_vanilla)))
print(np.array_equal(fused[:, 2 * q :], mhsa(x, params.mhsa)))

# %%
# Receptive fields: poke one pixel and see which outputs move two pixels
# away. The plain branch cannot see it, the dilated one lands on it, and
# attention sees everything.
y = x.copy()
y[0, :, 6, 6] += 1.0
diff = np.abs(conformer_features(y, params) - fused)[0, :, 6, 8]
print("vanilla", diff[:q].max() > 0, "dilated", diff[q : 2 * q].max() > 0, "attention", diff[2 * q :].max() > 0)
