"""
Spectral-residual saliency on a synthetic scene
================================================

A small bright square on a textured background is the only thing that
breaks the statistics of the image, so it should light up.
"""

import numpy as np

from owdkit import Box, region_saliency, spectral_residual

rng = np.random.default_rng(0)

# a soft periodic texture with a 6x6 patch that does not belong
yy, xx = np.mgrid[:96, :128]
img = 0.5 + 0.1 * np.sin(xx / 3.0) * np.cos(yy / 5.0) + 0.02 * rng.standard_normal((96, 128))
img[40:46, 90:96] = 1.0
img = np.clip(img, 0, 1)

sal = spectral_residual(img)
r, c = np.unravel_index(np.argmax(sal), sal.shape)
print("map shape", sal.shape, "range", sal.min(), sal.max())
print("peak at row %d col %d (patch center is 42.5, 92.5)" % (r, c))

# %%
# Restricting to proposals: the map is computed per crop and is zero elsewhere.

regions = [Box(80, 30, 30, 25), Box(10, 10, 20, 20)]
rs = region_saliency(img, regions)
print("nonzero pixels:", int((rs > 0).sum()), "of", rs.size)
print("mass inside the patch region: %.2f" % (rs[30:55, 80:110].sum() / rs.sum()))

# %%
# A constant frame has no residual at all.

print("constant image max:", spectral_residual(np.full((64, 64), 0.3)).max())
