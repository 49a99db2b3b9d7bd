"""Spatial high-frequency extraction with derivative kernels.

All kernels are stored in convolution orientation, so convolving an impulse
reproduces the kernel.  The x direction runs along columns (axis 1) and the
x kernels compute ``f(x+1) - f(x-1)``-style differences; y kernels are their
transposes.  Padding is circular so that the spatial result equals the
product of spectra exactly.

Sobel kernels use raw integer coefficients:

* 3x3: derivative ``[1, 0, -1]`` times smoothing ``[1, 2, 1]``
* 5x5: derivative ``[1, 2, 0, -2, -1]`` times smoothing ``[1, 4, 6, 4, 1]``
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagecore import as_array


class GradientOperator(str, enum.Enum):
    SOBEL = "sobel"
    CENTRAL_DIFFERENCE = "central_difference"


_DERIVATIVE = {3: np.array([1.0, 0.0, -1.0]), 5: np.array([1.0, 2.0, 0.0, -2.0, -1.0])}
_SMOOTHING = {3: np.array([1.0, 2.0, 1.0]), 5: np.array([1.0, 4.0, 6.0, 4.0, 1.0])}


@dataclass(frozen=True)
class GradientSpec:
    directions: tuple = ("x", "y")
    kernel_size: int = 3
    operator: GradientOperator = GradientOperator.SOBEL

    def __post_init__(self):
        object.__setattr__(self, "operator", GradientOperator(self.operator))
        dirs = tuple(self.directions)
        if not dirs or any(d not in ("x", "y") for d in dirs) or len(set(dirs)) != len(dirs):
            raise ValueError(f"directions must be a nonempty subset of ('x', 'y'), got {dirs}")
        # fixed output order: x then y
        object.__setattr__(self, "directions", tuple(d for d in ("x", "y") if d in dirs))
        if self.kernel_size not in (3, 5):
            raise ValueError(f"kernel_size must be 3 or 5, got {self.kernel_size}")
        if self.operator is GradientOperator.CENTRAL_DIFFERENCE and self.kernel_size != 3:
            raise ValueError("central difference is only defined with kernel_size 3")

    def to_dict(self):
        return {"directions": list(self.directions), "kernel_size": self.kernel_size,
                "operator": self.operator.value}


def kernel(spec: GradientSpec, direction: str) -> np.ndarray:
    """2D convolution kernel for one direction."""
    k = spec.kernel_size
    if spec.operator is GradientOperator.CENTRAL_DIFFERENCE:
        kx = np.zeros((3, 3))
        kx[1] = _DERIVATIVE[3]
    else:
        kx = np.outer(_SMOOTHING[k], _DERIVATIVE[k])
    return kx if direction == "x" else kx.T.copy()


def gradient_extract(img, spec: GradientSpec) -> np.ndarray:
    """Per-channel gradients stacked as ``[g_x(c0..cn), g_y(c0..cn)]``."""
    arr = as_array(img)
    if arr.ndim == 2:
        arr = arr[..., None]
    out = []
    for direction in spec.directions:
        k = kernel(spec, direction)
        for c in range(arr.shape[2]):
            out.append(ndimage.convolve(arr[..., c], k, mode="wrap"))
    return np.stack(out, axis=-1)


def gradient_transfer(spec: GradientSpec, dims, direction: str) -> np.ndarray:
    """Centred complex transfer function of a direction's kernel.

    For the central difference along x this is
    ``exp(j 2 pi u / N) - exp(-j 2 pi u / N) = 2j sin(2 pi u / N)`` where ``u``
    is the column frequency: it scales *and* rotates the phase of each bin,
    and vanishes on the whole ``u = 0`` line.
    """
    m, n = dims
    k = kernel(spec, direction)
    r = k.shape[0] // 2
    v = np.fft.fftfreq(m)[:, None]  # row frequency, cycles/sample
    u = np.fft.fftfreq(n)[None, :]
    h = np.zeros((m, n), dtype=complex)
    for i in range(k.shape[0]):
        for j in range(k.shape[1]):
            if k[i, j]:
                dy, dx = i - r, j - r
                # out(x) += k * f(x - dx)  ->  F * k * exp(-j 2 pi u dx)
                h += k[i, j] * np.exp(-2j * np.pi * (u * dx + v * dy))
    return np.fft.fftshift(h)


def spectral_gradient(img, spec: GradientSpec, direction: str) -> np.ndarray:
    """Gradient of a single-channel image computed by spectral multiplication."""
    arr = as_array(img)
    if arr.ndim == 3:
        arr = arr[..., 0]
    h = np.fft.ifftshift(gradient_transfer(spec, arr.shape, direction))
    return np.fft.ifft2(np.fft.fft2(arr) * h).real


def gradient_transfer_equivalence(img, spec: GradientSpec) -> float:
    """Max abs difference between the spatial and spectral gradient paths."""
    arr = as_array(img)
    if arr.ndim == 3:
        if arr.shape[2] != 1:
            raise ValueError("equivalence check takes a single-channel image")
        arr = arr[..., 0]
    spatial = gradient_extract(arr, spec)
    dev = 0.0
    for i, direction in enumerate(spec.directions):
        spectral = spectral_gradient(arr, spec, direction)
        dev = max(dev, float(np.abs(spatial[..., i] - spectral).max()))
    return dev
