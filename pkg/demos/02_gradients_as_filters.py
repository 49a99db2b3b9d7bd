"""
Image gradients are high-pass filters
=====================================

Convolving with a derivative kernel multiplies the spectrum by that kernel's
transfer function.  With circular padding the two routes agree to rounding
error.  The transfer of the x central difference, 2j sin(2 pi u / N), is zero
on the whole u = 0 column.  A larger Sobel kernel smooths more, so less of its
output energy sits in the top frequency band.
"""

import numpy as np

from fair.freqfilter import dft2, distance_grid
from fair.gradfilter import GradientSpec, gradient_extract, gradient_transfer_equivalence
from fair.toydata import texture_image

img = texture_image(np.random.default_rng(1), 128).mean(axis=2)

# %%
# Spatial vs spectral
for spec in (GradientSpec(operator="central_difference"), GradientSpec(), GradientSpec(kernel_size=5)):
    dev = gradient_transfer_equivalence(img, spec)
    print(f"{spec.operator.value:18s} k={spec.kernel_size}: max deviation {dev:.2e}")

# %%
# The x derivative removes every coefficient with no horizontal frequency
gx = gradient_extract(img, GradientSpec(("x",), operator="central_difference"))[..., 0]
spec = dft2(gx).values
print(f"max |G_x| on u = 0: {np.abs(spec[:, spec.shape[1] // 2]).max():.2e}")

# %%
# Top-quartile band share for 3x3 and 5x5 Sobel on white noise
noise = np.random.default_rng(2).random((128, 128))
d = distance_grid(noise.shape)
top = d >= np.quantile(d, 0.75)
for k in (3, 5):
    g = gradient_extract(noise, GradientSpec(kernel_size=k))
    e = sum(np.abs(dft2(g[..., c]).values) ** 2 for c in range(g.shape[-1]))
    print(f"Sobel {k}x{k}: {e[top].sum() / e.sum():.2e} of the energy in the top band")
