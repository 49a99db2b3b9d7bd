"""
Detecting pasted squares on a toy texture
=========================================

A 64 px texture category is generated on disk, a small restoration network
is trained on its normal images (a few minutes on one CPU core), and the test
split is scored.  Finally the radial spectra of originals and restorations
are compared: restorations of anomalous images drift further from their
inputs, most clearly at high frequencies.
"""

import sys
import time

import numpy as np
import torch

from fair import analysis, toydata
from fair.evaluation import evaluate_category
from fair.freqfilter import FilterSpec
from fair.imagecore import list_images, load_image
from fair.pipeline import Detector, TrainConfig, train
from fair.restoration import NetConfig

torch.set_num_threads(1)
out = analysis.ensure_dir(sys.argv[1] if len(sys.argv) > 1 else "demo_out/toy")

# %%
# Data: 8 normal training images, 10 normal and 10 anomalous test images
root = toydata.make_category(out / "weave", seed=0, size=64, n_train=8)

# %%
# Train.  The cutoff is scaled with the image: 30 at 256 px is 7.5 at 64 px.
cfg = TrainConfig(epochs=200, batch_size=8, image_size=64,
                  extractor=FilterSpec("butterworth", 7.5, 2), net=NetConfig(base_width_c=32))
t0 = time.perf_counter()
run = train(root / "train" / "good", cfg, out_dir=out / "run")
print(f"trained in {time.perf_counter() - t0:.0f}s, loss {run.loss_curve[0]:.3f} -> {run.loss_curve[-1]:.3f}")
analysis.save_loss_plot(out / "loss.png", run.loss_curve)

# %%
# Evaluate
det = Detector(run.model, cfg.extractor, 64)
metrics, rows, outputs = evaluate_category(det, root)
print({k: round(v, 3) for k, v in metrics.items() if isinstance(v, float)})
name = next(n for n in outputs if n.startswith("square"))
img, res = outputs[name]
analysis.plot_images(out / "example.png", {"input": img, "restored": res.restored,
                                           "anomaly map": res.anomaly_map.values}, normalize=True)

# %%
# Frequency view of the restorations
normal = [load_image(p) for p in list_images(root / "test" / "good")]
bad = [load_image(p) for p in list_images(root / "test" / "square")]
centers, n_curve, a_curve = analysis.frequency_bias(det, normal, bad, n_bins=32)
ok = ~np.isnan(n_curve) & ~np.isnan(a_curve)
print(f"anomalous below normal in {np.mean(a_curve[ok] < n_curve[ok]):.0%} of bins")
analysis.plot_curves(out / "freq_bias.png", centers, {"normal": n_curve, "anomalous": a_curve},
                     "D(u,v)", "cosine similarity")
