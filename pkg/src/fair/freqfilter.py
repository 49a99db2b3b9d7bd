"""Frequency-domain high-pass filtering and spectral diagnostics.

Spectra are kept centred: the DC bin sits at index ``(M // 2, N // 2)`` and the
radial distance of bin ``(u, v)`` is ``sqrt((u - M//2)**2 + (v - N//2)**2)``.
The forward transform is unnormalised, the inverse carries the ``1 / MN``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .imagecore import as_array


class FilterFamily(str, enum.Enum):
    IDEAL = "ideal"
    GAUSSIAN = "gaussian"
    BUTTERWORTH = "butterworth"


@dataclass(frozen=True)
class FilterSpec:
    family: FilterFamily = FilterFamily.BUTTERWORTH
    cutoff_d0: float = 30.0
    order_n: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", FilterFamily(self.family))
        if not self.cutoff_d0 > 0:
            raise ValueError(f"cutoff_d0 must be positive, got {self.cutoff_d0}")
        if int(self.order_n) != self.order_n or self.order_n < 1:
            raise ValueError(f"order_n must be a positive integer, got {self.order_n}")

    def to_dict(self):
        return {"family": self.family.value, "cutoff_d0": float(self.cutoff_d0), "order_n": int(self.order_n)}


@dataclass
class Spectrum:
    values: np.ndarray
    source_dims: tuple

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass
class TransferFunction:
    values: np.ndarray
    spec: FilterSpec


@dataclass
class RadialProfile:
    """Per-bin values over equal-width radial bins partitioning ``[0, D_max]``."""

    edges: np.ndarray
    values: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def share(self) -> np.ndarray:
        return self.values / self.values.sum()


def distance_grid(dims) -> np.ndarray:
    m, n = dims
    u = np.arange(m) - m // 2
    v = np.arange(n) - n // 2
    return np.sqrt(u[:, None] ** 2 + v[None, :] ** 2)


def dft2(img) -> Spectrum:
    arr = as_array(img)
    if arr.ndim == 3:
        if arr.shape[2] != 1:
            raise ValueError("dft2 takes a single-channel image; filter channels separately")
        arr = arr[..., 0]
    return Spectrum(np.fft.fftshift(np.fft.fft2(arr)), arr.shape)


def idft2(spectrum: Spectrum) -> np.ndarray:
    """Inverse of :func:`dft2`; the imaginary residue is discarded."""
    return np.fft.ifft2(np.fft.ifftshift(spectrum.values)).real


def transfer_values(spec: FilterSpec, d) -> np.ndarray:
    """Evaluate the high-pass transfer function at radial distance(s) ``d``."""
    d = np.asarray(d, dtype=np.float64)
    d0 = float(spec.cutoff_d0)
    if spec.family is FilterFamily.IDEAL:
        return (d > d0).astype(np.float64)
    if spec.family is FilterFamily.GAUSSIAN:
        return 1.0 - np.exp(-(d**2) / (2.0 * d0**2))
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = 1.0 / (1.0 + (d0 / d[nz]) ** (2 * int(spec.order_n)))
    return out


def make_transfer(spec: FilterSpec, dims) -> TransferFunction:
    m, n = dims
    if m < 1 or n < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    return TransferFunction(transfer_values(spec, distance_grid(dims)), spec)


def highpass(img, spec: FilterSpec) -> np.ndarray:
    """High-pass filter every channel independently.

    The output is real and unclamped: high-pass content is signed.
    """
    arr = as_array(img)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[..., None]
    h = make_transfer(spec, arr.shape[:2]).values
    # uncentred transfer lets us skip the shift round trip
    h = np.fft.ifftshift(h)[..., None]
    out = np.fft.ifft2(np.fft.fft2(arr, axes=(0, 1)) * h, axes=(0, 1)).real
    return out[..., 0] if squeeze else out


def impulse_response(spec: FilterSpec, dims) -> np.ndarray:
    """Spatial impulse response of the filter, centred at ``(M//2, N//2)``."""
    h = make_transfer(spec, dims).values
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(h)).real)


# A Gaussian transfer sampled on a finite grid is truncated at the border,
# which leaves sign ripples around 1e-6 of the peak; those are not ringing.
RINGING_REL_TOL = 1e-6


def radial_lobe_radius(response: np.ndarray, rel_tol: float = RINGING_REL_TOL) -> int | None:
    """Radius at which the impulse response first changes sign past the centre.

    The profile is read along the positive column axis from the centre.
    Samples smaller than ``rel_tol * max|response|`` count as zero and never
    start a new lobe.  Returns ``None`` if the sign never flips (no ringing).
    """
    cy, cx = response.shape[0] // 2, response.shape[1] // 2
    profile = response[cy, cx + 1 :]
    floor = rel_tol * np.abs(response).max()
    sign = 0
    for r, value in enumerate(profile, start=1):
        if abs(value) <= floor:
            continue
        s = 1 if value > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return r
    return None


def out_of_lobe_energy(response: np.ndarray, rel_tol: float = RINGING_REL_TOL) -> float:
    """Sum of ``|response|`` beyond the central lobe; 0 if there is no ringing."""
    r = radial_lobe_radius(response, rel_tol)
    if r is None:
        return 0.0
    d = distance_grid(response.shape)
    return float(np.abs(response[d >= r]).sum())


def band_energy(img, d_max: float) -> float:
    """Spectral energy of ``img`` over bins with ``D(u, v) <= d_max``."""
    spec = _channel_spectra(img)
    d = distance_grid(spec.shape[:2])
    return float((np.abs(spec[d <= d_max]) ** 2).sum())


def _radial_bins(dims, n_bins: int):
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    d = distance_grid(dims)
    d_max = d.max()
    edges = np.linspace(0.0, d_max, n_bins + 1)
    if d_max == 0:
        idx = np.zeros(d.shape, dtype=int)
    else:
        idx = np.minimum((d / d_max * n_bins).astype(int), n_bins - 1)
    return edges, idx


def _channel_spectra(img) -> np.ndarray:
    arr = as_array(img)
    if arr.ndim == 2:
        arr = arr[..., None]
    return np.fft.fftshift(np.fft.fft2(arr, axes=(0, 1)), axes=(0, 1))


def energy_profile(img, n_bins: int = 64) -> RadialProfile:
    """Spectral energy ``sum |F|^2`` per radial bin, summed over channels."""
    spec = _channel_spectra(img)
    edges, idx = _radial_bins(spec.shape[:2], n_bins)
    power = (np.abs(spec) ** 2).sum(axis=2)
    values = np.bincount(idx.ravel(), weights=power.ravel(), minlength=n_bins)
    return RadialProfile(edges, values)


def radial_similarity(a, b, n_bins: int = 64, magnitude_only: bool = False) -> RadialProfile:
    """Cosine similarity of the spectra of ``a`` and ``b`` inside each radial bin.

    By default complex coefficients are compared as interleaved (re, im)
    vectors, which makes the score phase sensitive.  ``magnitude_only``
    compares ``|F|`` instead.  Bins where either spectrum is all zero give NaN.
    """
    a = as_array(a)
    b = as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    fa, fb = _channel_spectra(a), _channel_spectra(b)
    edges, idx = _radial_bins(fa.shape[:2], n_bins)
    idx = np.broadcast_to(idx[..., None], fa.shape).ravel()
    if magnitude_only:
        fa, fb = np.abs(fa), np.abs(fb)
        dot = (fa * fb).ravel()
    else:
        dot = (fa * np.conj(fb)).real.ravel()
    na = np.bincount(idx, weights=(np.abs(fa) ** 2).ravel(), minlength=n_bins)
    nb = np.bincount(idx, weights=(np.abs(fb) ** 2).ravel(), minlength=n_bins)
    num = np.bincount(idx, weights=dot, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = num / np.sqrt(na * nb)
    values[(na == 0) | (nb == 0)] = np.nan
    return RadialProfile(edges, np.clip(values, -1.0, 1.0))
