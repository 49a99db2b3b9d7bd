"""Image containers, sRGB -> CIELAB conversion, bilinear resize and mean pyramids.

Images are plain ``float64`` numpy arrays laid out ``(H, W, C)`` with values in
``[0, 1]``.  Single-channel images may also be passed as ``(H, W)``.  The
:class:`Image` dataclass exists for the few places that need to carry a color
space tag alongside the pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import InvalidColorSpaceError

SRGB = "srgb"
CIELAB = "cielab"
GRAYSCALE = "grayscale"
COLOR_SPACES = (SRGB, CIELAB, GRAYSCALE)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

# linear sRGB -> XYZ, IEC 61966-2-1 primaries
_RGB_TO_XYZ = np.array(
    [
        [0.4124, 0.3576, 0.1805],
        [0.2126, 0.7152, 0.0722],
        [0.0193, 0.1192, 0.9505],
    ]
)
# D65 reference white, taken as the XYZ of sRGB (1, 1, 1) so that neutral
# grays land exactly on a = b = 0.
D65_WHITE = _RGB_TO_XYZ.sum(axis=1)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass
class Image:
    data: np.ndarray
    color_space: str = SRGB

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[..., None]
        if data.ndim != 3 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"image must be (H, W, C), got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite values")
        if self.color_space not in COLOR_SPACES:
            raise InvalidColorSpaceError(f"unknown color space {self.color_space!r}")
        if self.color_space == SRGB and (data.min() < 0 or data.max() > 1):
            raise ValueError("sRGB image values must lie in [0, 1]")
        self.data = data

    @property
    def shape(self):
        return self.data.shape


@dataclass
class LabImage:
    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.L, self.a, self.b], axis=-1)


def as_array(img) -> np.ndarray:
    """Return the pixel array of an :class:`Image` or array-like as float64."""
    if isinstance(img, Image):
        return img.data
    return np.asarray(img, dtype=np.float64)


def load_image(path, size=None) -> np.ndarray:
    """Decode an image file to an ``(H, W, 3)`` float array in [0, 1].

    8-bit data is divided by 255 exactly.  ``size`` is an optional ``(h, w)``
    passed through :func:`resize`.
    """
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    if size is not None:
        arr = resize(arr, *size)
    return arr


def load_mask(path, size=None) -> np.ndarray:
    """Decode a ground-truth mask as a boolean ``(H, W)`` array."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    if size is not None:
        arr = resize(arr[..., None], *size)[..., 0]
    return arr > 0.5


def save_image(path, img) -> None:
    arr = as_array(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[..., 0]
    arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    PILImage.fromarray(arr).save(path)


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    delta = 6.0 / 29.0
    return np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)


def to_lab(img) -> LabImage:
    """Convert an sRGB image to CIELAB under the D65 white point.

    Raises:
        InvalidColorSpaceError: if the input is tagged with a non-sRGB color
            space or does not have exactly three channels.
    """
    if isinstance(img, Image) and img.color_space != SRGB:
        raise InvalidColorSpaceError(f"to_lab expects sRGB input, got {img.color_space}")
    rgb = as_array(img)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise InvalidColorSpaceError(f"sRGB image must have 3 channels, got shape {rgb.shape}")
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T
    fx, fy, fz = (_lab_f(xyz[..., i] / D65_WHITE[i]) for i in range(3))
    return LabImage(L=116.0 * fy - 16.0, a=500.0 * (fx - fy), b=200.0 * (fy - fz))


def to_gray(img) -> np.ndarray:
    """Luma (0.299, 0.587, 0.114) of an RGB image; passes 1-channel through."""
    arr = as_array(img)
    if arr.ndim == 2:
        return arr
    if arr.shape[-1] == 1:
        return arr[..., 0]
    return arr @ LUMA_WEIGHTS


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    # half-pixel centres, edge samples clamped
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(m, (rows, lo), 1.0 - frac)
    np.add.at(m, (rows, hi), frac)
    return m


def resize(img, h: int, w: int) -> np.ndarray:
    """Bilinear resize to ``(h, w)`` with half-pixel sample centres.

    The result is clamped to [0, 1].  Resizing to the current size returns the
    input unchanged.
    """
    if h < 1 or w < 1:
        raise ValueError(f"target size must be positive, got ({h}, {w})")
    arr = as_array(img)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[..., None]
    if arr.shape[:2] == (h, w):
        out = arr.copy()
    else:
        rows = _interp_matrix(arr.shape[0], h)
        cols = _interp_matrix(arr.shape[1], w)
        out = np.einsum("ij,jkc->ikc", rows, arr, optimize=True)
        out = np.einsum("lk,ikc->ilc", cols, out, optimize=True)
    out = np.clip(out, 0.0, 1.0)
    return out[..., 0] if squeeze else out


def downsample2(img) -> np.ndarray:
    """2x2 mean pooling."""
    arr = as_array(img)
    h, w = arr.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"dims {(h, w)} are not divisible by 2")
    return 0.25 * (arr[0::2, 0::2] + arr[1::2, 0::2] + arr[0::2, 1::2] + arr[1::2, 1::2])


def pyramid(img, levels: int) -> list[np.ndarray]:
    """Mean-pooling pyramid; level 0 is the input, level k has dims ``(H/2^k, W/2^k)``."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    arr = as_array(img)
    factor = 2 ** (levels - 1)
    if arr.shape[0] % factor or arr.shape[1] % factor:
        raise ValueError(f"dims {arr.shape[:2]} not divisible by {factor} for {levels} levels")
    out = [arr]
    for _ in range(levels - 1):
        out.append(downsample2(out[-1]))
    return out
