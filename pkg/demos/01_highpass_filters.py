"""
High-pass filters and their ringing
===================================

Three high-pass transfer functions share the cutoff D0 = 30 on a 256 px grid.
The ideal filter is a hard step, the Gaussian a smooth ramp, and the
Butterworth sits in between.  The step's impulse response oscillates far from
its centre, and those ripples reappear as halos around edges in the filtered
image.
"""

import sys

import numpy as np

from fair import analysis
from fair.freqfilter import FilterSpec, highpass, impulse_response, out_of_lobe_energy
from fair.toydata import texture_image

out = analysis.ensure_dir(sys.argv[1] if len(sys.argv) > 1 else "demo_out/filters")
specs = [FilterSpec("ideal", 30), FilterSpec("gaussian", 30), FilterSpec("butterworth", 30, 2)]

# %%
# Transfer functions along a ray from the spectrum centre
curves = {}
for spec in specs:
    d, h = analysis.transfer_curve(spec, 90)
    curves[spec.family.value] = h
    print(f"{spec.family.value:12s} H(D0) = {h[30]:.4f}")
analysis.plot_curves(out / "transfer.png", d, curves, "D(u,v)", "H")

# %%
# Impulse responses: how much energy lies outside the central lobe
for spec in specs:
    h = impulse_response(spec, (256, 256))
    print(f"{spec.family.value:12s} out-of-lobe energy {out_of_lobe_energy(h):.4g}")

# %%
# Filter a texture with a dark square pasted on it.  The square's edges
# ring under the ideal filter.
img = texture_image(np.random.default_rng(0), 256)
img[100:156, 100:156] = 0.05
panels = {"input": img}
for spec in specs:
    panels[spec.family.value] = highpass(img, spec).mean(axis=2)
analysis.plot_images(out / "filtered.png", panels)
print(f"figures written to {out}")
