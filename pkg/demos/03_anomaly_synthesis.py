"""
Synthetic anomalies for training
================================

Training only ever sees normal images.  Each one is corrupted on the fly:
half the time a Perlin-shaped blob is blended with a texture, a quarter of
the time a large rectangle of the image is cut, turned and pasted back, and
otherwise the image is left alone.  The network learns to undo all three.
"""

import sys

import numpy as np

from fair import analysis
from fair.synth import SynthConfig, TextureSource, corrupt, sample_rng
from fair.toydata import texture_image

out = analysis.ensure_dir(sys.argv[1] if len(sys.argv) > 1 else "demo_out/synthesis")
clean = texture_image(np.random.default_rng(3), 128)
source = TextureSource("internal")  # textures are cut from the image itself

panels = {}
for i in range(6):
    s = corrupt(clean, sample_rng(0, i), source, SynthConfig())
    # pixels outside the mask are untouched
    assert np.array_equal(s.corrupted[~s.mask], clean[~s.mask])
    panels[f"{s.kind} {s.area_fraction:.0%}"] = s.corrupted
    print(f"sample {i}: {s.kind:8s} mask covers {s.area_fraction:.1%}")
analysis.plot_images(out / "samples.png", panels, normalize=False)
print(f"figure written to {out}")
