"""Training-time anomaly synthesis.

Two corruptions are generated on top of clean normal images:

* Perlin-shaped texture blending: a thresholded, rotated Perlin noise field
  selects pixels that are alpha-blended with a texture.  Textures come from a
  directory of images, or (internal mode) from a transformed crop of the clean
  image itself so no extra data is touched.
* Large CutPaste: one axis-aligned rectangle, covering strictly more than
  half of the image, is copied from elsewhere in the same image, optionally
  rotated by a multiple of 90 degrees and mirrored, and pasted.

Every sample keeps ``corrupted == clean`` exactly wherever ``mask`` is False.
Randomness is taken from ``numpy.random.Generator`` objects; anything passed
as ``rng_seed`` goes through ``np.random.default_rng``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import ImageOps
from scipy import ndimage

from .errors import ConfigurationError
from .imagecore import as_array, list_images, load_image, resize

PERLIN = "perlin"
CUTPASTE = "cutpaste"
CLEAN = "clean"


@dataclass
class SyntheticSample:
    corrupted: np.ndarray
    clean: np.ndarray
    mask: np.ndarray
    kind: str = CLEAN

    @property
    def area_fraction(self) -> float:
        return float(self.mask.mean())


@dataclass
class TextureSource:
    """Where blend textures come from: ``"external"`` directory or ``"internal"``."""

    mode: str = "internal"
    path: str | None = None

    def __post_init__(self):
        if self.mode not in ("external", "internal"):
            raise ConfigurationError(f"unknown texture mode {self.mode!r}", "synth.texture.mode")
        self.files = []
        if self.mode == "external":
            if self.path is None or not Path(self.path).is_dir():
                raise ConfigurationError(f"texture directory {self.path!r} does not exist",
                                         "synth.texture.path")
            self.files = list_images(self.path)
            if not self.files:
                raise ConfigurationError(f"texture directory {self.path} holds no images",
                                         "synth.texture.path")
            try:
                _load_texture(str(self.files[0]), 8, 8)
            except OSError as exc:
                raise ConfigurationError(f"cannot decode {self.files[0]}: {exc}",
                                         "synth.texture.path") from exc


@dataclass
class PerlinConfig:
    lattice_scales: tuple = (2, 4, 8, 16)
    threshold: float = 0.5
    beta_range: tuple = (0.2, 1.0)
    area_band: tuple = (0.001, 0.5)
    max_rotation: float = 90.0
    augment_texture: bool = True
    max_tries: int = 100


@dataclass
class CutPasteConfig:
    max_area: float = 0.8


@dataclass
class CorruptionPolicy:
    p_perlin: float = 0.5
    p_cutpaste: float = 0.25
    p_clean: float = 0.25

    def __post_init__(self):
        probs = self.probabilities
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigurationError(f"corruption probabilities {probs} must be >= 0 and sum to 1",
                                     "synth.policy")

    @property
    def probabilities(self):
        return (self.p_perlin, self.p_cutpaste, self.p_clean)


@dataclass
class SynthConfig:
    policy: CorruptionPolicy = field(default_factory=CorruptionPolicy)
    perlin: PerlinConfig = field(default_factory=PerlinConfig)
    cutpaste: CutPasteConfig = field(default_factory=CutPasteConfig)


def _fade(t):
    return 6 * t**5 - 15 * t**4 + 10 * t**3


def perlin_noise(shape, res, rng) -> np.ndarray:
    """2D gradient noise with ``res = (ry, rx)`` lattice cells over ``shape``.

    Values lie roughly in ``[-sqrt(2)/2, sqrt(2)/2]``.
    """
    ry, rx = res
    # grid must be a multiple of the lattice; generate large then crop
    cy, cx = math.ceil(shape[0] / ry), math.ceil(shape[1] / rx)
    gh, gw = cy * ry, cx * rx
    ys = (np.arange(gh) / cy) % 1.0
    xs = (np.arange(gw) / cx) % 1.0
    ty, tx = np.meshgrid(ys, xs, indexing="ij")
    angles = 2 * np.pi * rng.random((ry + 1, rx + 1))
    grads = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    def corner(oy, ox):
        g = grads[oy : oy + ry, ox : ox + rx].repeat(cy, 0).repeat(cx, 1)
        return (ty - oy) * g[..., 0] + (tx - ox) * g[..., 1]

    n00, n10, n01, n11 = corner(0, 0), corner(1, 0), corner(0, 1), corner(1, 1)
    fy, fx = _fade(ty), _fade(tx)
    top = n00 + fx * (n01 - n00)
    bottom = n10 + fx * (n11 - n10)
    return (top + fy * (bottom - top))[: shape[0], : shape[1]]


def perlin_mask(shape, rng, config: PerlinConfig | None = None) -> np.ndarray:
    """Binary anomaly shape from rotated, min-max normalised Perlin noise.

    Draws until the area fraction falls inside ``config.area_band``
    (lower bound exclusive, upper inclusive).
    """
    config = config or PerlinConfig()
    lo, hi = config.area_band
    scales = [s for s in config.lattice_scales if s <= max(1, min(shape) // 2)] or [1]
    for _ in range(config.max_tries):
        res = (int(rng.choice(scales)), int(rng.choice(scales)))
        noise = perlin_noise(shape, res, rng)
        angle = rng.uniform(-config.max_rotation, config.max_rotation)
        noise = ndimage.rotate(noise, angle, reshape=False, order=1, mode="reflect")
        span = noise.max() - noise.min()
        norm = (noise - noise.min()) / span if span > 0 else np.zeros_like(noise)
        mask = norm > config.threshold
        frac = mask.mean()
        if lo < frac <= hi:
            return mask
    raise RuntimeError(f"no Perlin mask with area in {config.area_band} after {config.max_tries} draws")


@functools.lru_cache(maxsize=64)
def _load_texture(path: str, h: int, w: int) -> np.ndarray:
    return load_image(path, size=(h, w))


def augment_texture(tex: np.ndarray, rng) -> np.ndarray:
    """Random subset of brightness/contrast jitter, equalize, rotate, mirror."""
    ops = rng.permutation(4)[: rng.integers(1, 4)]
    out = tex
    for op in ops:
        if op == 0:
            gain = rng.uniform(0.7, 1.3)
            bias = rng.uniform(-0.15, 0.15)
            out = np.clip((out - out.mean()) * gain + out.mean() + bias, 0.0, 1.0)
        elif op == 1:
            pil = PILImage.fromarray(np.clip(np.rint(out * 255), 0, 255).astype(np.uint8))
            out = np.asarray(ImageOps.equalize(pil), dtype=np.float64) / 255.0
        elif op == 2:
            angle = rng.uniform(-90.0, 90.0)
            out = np.clip(ndimage.rotate(out, angle, axes=(0, 1), reshape=False, order=1,
                                         mode="reflect"), 0.0, 1.0)
        else:
            out = out[:, ::-1] if rng.random() < 0.5 else out[::-1]
    return np.ascontiguousarray(out)


def draw_texture(clean: np.ndarray, source: TextureSource, rng, augment: bool = True) -> np.ndarray:
    h, w = clean.shape[:2]
    if source.mode == "external":
        path = source.files[rng.integers(len(source.files))]
        tex = _load_texture(str(path), h, w)
    else:
        ch = int(rng.integers(max(1, h // 4), h + 1))
        cw = int(rng.integers(max(1, w // 4), w + 1))
        y0 = int(rng.integers(0, h - ch + 1))
        x0 = int(rng.integers(0, w - cw + 1))
        tex = clean[y0 : y0 + ch, x0 : x0 + cw]
        tex = np.rot90(tex, int(rng.integers(4)))
        tex = resize(tex, h, w)
    if augment:
        tex = augment_texture(tex, rng)
    return tex


def blend(clean, texture, mask, beta: float) -> np.ndarray:
    """``(1 - beta) * clean + beta * texture`` on masked pixels, clean elsewhere."""
    clean = as_array(clean)
    mixed = (1.0 - beta) * clean + beta * as_array(texture)
    return np.where(mask[..., None], mixed, clean)


def perlin_anomaly(clean, source: TextureSource, rng_seed=None,
                   config: PerlinConfig | None = None) -> SyntheticSample:
    config = config or PerlinConfig()
    rng = np.random.default_rng(rng_seed)
    clean = as_array(clean)
    if source.mode == "external" and not source.files:
        raise ConfigurationError("texture source is empty", "synth.texture")
    mask = perlin_mask(clean.shape[:2], rng, config)
    texture = draw_texture(clean, source, rng, augment=config.augment_texture)
    beta = rng.uniform(*config.beta_range)
    return SyntheticSample(blend(clean, texture, mask, beta), clean, mask, PERLIN)


def cutpaste_large(clean, rng_seed=None, config: CutPasteConfig | None = None) -> SyntheticSample:
    config = config or CutPasteConfig()
    rng = np.random.default_rng(rng_seed)
    clean = as_array(clean)
    h, w = clean.shape[:2]
    if h * w < 2:
        raise ValueError("image too small for a paste covering more than half of it")
    half = 0.5 * h * w
    while True:
        ph = int(rng.integers(h // 2 + 1, h + 1))
        pw_min = int(half // ph) + 1
        if pw_min > w:
            continue
        pw_max = max(pw_min, min(w, int(config.max_area * h * w / ph)))
        pw = int(rng.integers(pw_min, pw_max + 1))
        k = int(rng.integers(4))
        if k % 2 and (pw > h or ph > w):
            k -= 1
        flip = bool(rng.random() < 0.5)
        sh, sw = (pw, ph) if k % 2 else (ph, pw)
        sy, sx = int(rng.integers(0, h - sh + 1)), int(rng.integers(0, w - sw + 1))
        ty, tx = int(rng.integers(0, h - ph + 1)), int(rng.integers(0, w - pw + 1))
        if k == 0 and not flip and (sy, sx) == (ty, tx):
            continue
        break
    patch = np.rot90(clean[sy : sy + sh, sx : sx + sw], k)
    if flip:
        patch = patch[:, ::-1]
    corrupted = clean.copy()
    corrupted[ty : ty + ph, tx : tx + pw] = patch
    mask = np.zeros((h, w), dtype=bool)
    mask[ty : ty + ph, tx : tx + pw] = True
    return SyntheticSample(corrupted, clean, mask, CUTPASTE)


def passthrough(clean) -> SyntheticSample:
    clean = as_array(clean)
    return SyntheticSample(clean.copy(), clean, np.zeros(clean.shape[:2], dtype=bool), CLEAN)


def sample_rng(base_seed, index: int) -> np.random.Generator:
    """Independent generator for one sample, derived from ``(base_seed, index)``."""
    base = list(base_seed) if isinstance(base_seed, (tuple, list)) else [int(base_seed)]
    return np.random.default_rng(base + [int(index)])


def choose_kind(rng, policy: CorruptionPolicy) -> str:
    return (PERLIN, CUTPASTE, CLEAN)[int(rng.choice(3, p=policy.probabilities))]


def corrupt(clean, rng, source: TextureSource, config: SynthConfig) -> SyntheticSample:
    kind = choose_kind(rng, config.policy)
    if kind == PERLIN:
        return perlin_anomaly(clean, source, rng, config.perlin)
    if kind == CUTPASTE:
        return cutpaste_large(clean, rng, config.cutpaste)
    return passthrough(clean)


def corrupt_batch(cleans, policy: CorruptionPolicy | None = None, rng_seed=0,
                  source: TextureSource | None = None, config: SynthConfig | None = None,
                  indices=None) -> list[SyntheticSample]:
    """Corrupt each image independently; sample ``i`` draws from ``sample_rng(rng_seed, indices[i])``."""
    config = config or SynthConfig()
    if policy is not None:
        config = SynthConfig(policy, config.perlin, config.cutpaste)
    source = source or TextureSource("internal")
    if indices is None:
        indices = range(len(cleans))
    return [corrupt(img, sample_rng(rng_seed, i), source, config) for img, i in zip(cleans, indices)]
