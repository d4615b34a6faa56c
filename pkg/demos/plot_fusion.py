"""
Fusing an image with its saliency map
=====================================

The fused image is ``I + b3 + w3 * (b1 + gamma * (w1 * S))`` clamped to
[0, 1], with ``*`` a zero-padded cross-correlation.
"""

import numpy as np

from owdkit import FusionWeights, merge, spectral_residual

img = np.full((32, 32, 3), 0.4)
s = np.ones((32, 32))

# default weights are identity kernels with gamma = 0.5
print("default:", merge(img, s, FusionWeights())[16, 16])

# %%
# A 3x3 box kernel on the saliency path spreads it and dims the border,
# where the zero padding pulls the average down.

box = np.full((3, 3), 1 / 9)
w = FusionWeights(w1=box)
fused = merge(img, s, w)
print("center", fused[16, 16, 0], "corner", round(fused[0, 0, 0], 4))

# %%
# Per-channel output kernels and biases.

w = FusionWeights(w3=(np.array([[1.0]]), np.array([[0.0]]), np.array([[2.0]])), b3=(0.0, 0.1, -0.2))
print("channels:", merge(img, s, w)[5, 5])

# %%
# With zero saliency the image passes through unchanged.

rgb = np.random.default_rng(1).random((24, 24, 3))
print("identity holds:", np.array_equal(merge(rgb, np.zeros((24, 24)), FusionWeights()), rgb))
sal = spectral_residual(rgb)
print("mean brightness before %.3f after %.3f" % (rgb.mean(), merge(rgb, sal, FusionWeights()).mean()))
