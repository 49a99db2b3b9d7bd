"""Procedural stand-in for an industrial texture category.

A category is one fixed texture (a woven grating plus smooth colored grain)
seen at random circular shifts with faint pixel noise, much like repeated
shots of the same surface.  Anomalies are dark squares pasted on top.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from scipy import ndimage

from .imagecore import save_image

BASE_COLOR = np.array([0.55, 0.45, 0.35])


def base_texture(size: int = 64, seed: int = 1234, period: float = 8.0, grain: float = 0.05) -> np.ndarray:
    """The category's reference texture (deterministic in ``seed``)."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    weave = 0.125 * np.sin(2 * np.pi * x / period) * np.sin(2 * np.pi * y / period)
    g = ndimage.gaussian_filter(rng.standard_normal((size, size, 3)), (1.0, 1.0, 0), mode="wrap")
    g /= g.std()
    return BASE_COLOR + weave[..., None] * np.array([1.0, 0.9, 0.7]) + grain * g


def texture_image(rng, size: int = 64, noise: float = 0.005, texture_seed: int = 1234) -> np.ndarray:
    """One normal image: the reference texture rolled by a random offset."""
    base = base_texture(size, texture_seed)
    dy, dx = rng.integers(0, size, 2)
    img = np.roll(base, (int(dy), int(dx)), axis=(0, 1)) + noise * rng.standard_normal(base.shape)
    return np.clip(img, 0.0, 1.0)


def paste_square(img, rng, side: int = 12, value=0.0):
    """Return ``(anomalous image, mask)`` with a ``side``-pixel square of ``value``."""
    h, w = img.shape[:2]
    y0 = int(rng.integers(0, h - side + 1))
    x0 = int(rng.integers(0, w - side + 1))
    out = img.copy()
    out[y0 : y0 + side, x0 : x0 + side] = value
    mask = np.zeros((h, w), dtype=bool)
    mask[y0 : y0 + side, x0 : x0 + side] = True
    return out, mask


def make_category(root, seed: int = 0, size: int = 64, n_train: int = 16,
                  n_test_good: int = 10, n_test_bad: int = 10, side: int = 12) -> Path:
    """Write an MVTec-style category (train/good, test/{good,square}, ground_truth/square)."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    for d in ("train/good", "test/good", "test/square", "ground_truth/square"):
        (root / d).mkdir(parents=True, exist_ok=True)
    for i in range(n_train):
        save_image(root / "train/good" / f"{i:03d}.png", texture_image(rng, size))
    for i in range(n_test_good):
        save_image(root / "test/good" / f"{i:03d}.png", texture_image(rng, size))
    for i in range(n_test_bad):
        img, mask = paste_square(texture_image(rng, size), rng, side)
        save_image(root / "test/square" / f"{i:03d}.png", img)
        save_image(root / "ground_truth/square" / f"{i:03d}_mask.png", mask.astype(float))
    return root
