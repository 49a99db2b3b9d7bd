"""Curves and figures behind the frequency diagnostics.

Everything here returns plain arrays; the ``plot_*`` helpers render them with
matplotlib's Agg backend and are only used for files written to disk.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .freqfilter import (  # noqa: E402
    FilterFamily,
    FilterSpec,
    energy_profile,
    highpass,
    impulse_response,
    out_of_lobe_energy,
    radial_similarity,
    transfer_values,
)


def transfer_curve(spec: FilterSpec, d_max: float, step: float = 1.0):
    d = np.arange(0.0, d_max + step / 2, step)
    return d, transfer_values(spec, d)


def impulse_profile(spec: FilterSpec, size: int = 256):
    """Impulse response along the row through the centre, from the centre outwards."""
    h = impulse_response(spec, (size, size))
    c = size // 2
    return np.arange(size - c, dtype=float), h[c, c:]


def ringing_table(d0: float = 30.0, order_n: int = 2, size: int = 256) -> dict:
    return {fam.value: out_of_lobe_energy(impulse_response(FilterSpec(fam, d0, order_n), (size, size)))
            for fam in FilterFamily}


def ringing_examples(img, d0: float = 30.0, order_n: int = 2) -> dict:
    return {fam.value: highpass(img, FilterSpec(fam, d0, order_n)) for fam in FilterFamily}


def energy_share(img, n_bins: int = 64):
    prof = energy_profile(img, n_bins)
    return prof.centers, prof.share()


def mean_similarity_curve(originals, restorations, n_bins: int = 64, magnitude_only: bool = False):
    curves = [radial_similarity(o, r, n_bins, magnitude_only) for o, r in zip(originals, restorations)]
    if not curves:
        raise ValueError("no images to compare")
    return curves[0].centers, np.nanmean([c.values for c in curves], axis=0)


def frequency_bias(detector, normal_images, anomalous_images, n_bins: int = 64,
                   magnitude_only: bool = False):
    """Mean original-vs-restored radial similarity for normal and anomalous images.

    Returns ``(centers, normal_curve, anomalous_curve)``.
    """
    def curve(images):
        prepared = [detector.prepare(im) for im in images]
        restored = [detector.infer(im).restored for im in prepared]
        return mean_similarity_curve(prepared, restored, n_bins, magnitude_only)

    centers, normal = curve(normal_images)
    _, anomalous = curve(anomalous_images)
    return centers, normal, anomalous


def write_curve_csv(path, centers, values, header=("bin_center", "value")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(centers, *np.atleast_2d(values)):
            w.writerow([f"{v:.10g}" for v in row])


def read_curve_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float)
    return rows[0], data


def plot_curves(path, x, curves: dict, xlabel: str, ylabel: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, y in curves.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(curves) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_images(path, images: dict, normalize: bool = True) -> None:
    fig, axes = plt.subplots(1, len(images), figsize=(3 * len(images), 3), squeeze=False)
    for ax, (label, img) in zip(axes[0], images.items()):
        img = np.asarray(img, dtype=float)
        if normalize:
            lo, hi = img.min(), img.max()
            img = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
        ax.imshow(np.clip(img, 0, 1), cmap="gray" if img.ndim == 2 else None)
        ax.set_title(label)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def heatmap_overlay(img, amap, alpha: float = 0.5) -> np.ndarray:
    """Min-max normalised anomaly map blended over the image (display only)."""
    amap = np.asarray(amap, dtype=float)
    lo, hi = amap.min(), amap.max()
    norm = (amap - lo) / (hi - lo) if hi > lo else np.zeros_like(amap)
    heat = matplotlib.colormaps["jet"](norm)[..., :3]
    return (1 - alpha) * np.asarray(img, dtype=float) + alpha * heat


def save_loss_plot(path, loss_curve) -> None:
    plot_curves(path, np.arange(1, len(loss_curve) + 1), {"loss": loss_curve}, "epoch", "mean loss")


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
