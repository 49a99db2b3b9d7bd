import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fair.freqfilter import dft2, distance_grid
from fair.gradfilter import (
    GradientSpec, gradient_extract, gradient_transfer, gradient_transfer_equivalence, kernel,
)

CD = GradientSpec(operator="central_difference")
SOBEL3 = GradientSpec()
SOBEL5 = GradientSpec(kernel_size=5)


def loop_convolve(img, k):
    """Circular 2D convolution by nested loops."""
    h, w = img.shape
    r = k.shape[0] // 2
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(k.shape[0]):
                for j in range(k.shape[1]):
                    acc += k[i, j] * img[(y - (i - r)) % h, (x - (j - r)) % w]
            out[y, x] = acc
    return out


def test_kernels_are_textbook():
    assert np.array_equal(kernel(SOBEL3, "x"), [[1, 0, -1], [2, 0, -2], [1, 0, -1]])
    assert np.array_equal(kernel(SOBEL3, "y"), [[1, 2, 1], [0, 0, 0], [-1, -2, -1]])
    assert np.array_equal(kernel(CD, "x")[1], [1, 0, -1])
    assert kernel(SOBEL5, "x").shape == (5, 5)
    assert np.array_equal(kernel(SOBEL5, "x")[2], [6, 12, 0, -12, -6])


@pytest.mark.parametrize("spec", [CD, SOBEL3, SOBEL5], ids=["cd", "sobel3", "sobel5"])
def test_matches_loop_oracle(spec, rng):
    img = rng.random((9, 11))
    out = gradient_extract(img, spec)
    for i, d in enumerate(spec.directions):
        assert np.abs(out[..., i] - loop_convolve(img, kernel(spec, d))).max() < 1e-12


def test_impulse_reproduces_kernel():
    img = np.zeros((9, 9))
    img[4, 4] = 1.0
    for spec in (CD, SOBEL3, SOBEL5):
        out = gradient_extract(img, spec)
        r = spec.kernel_size // 2
        for i, d in enumerate(spec.directions):
            patch = out[4 - r : 5 + r, 4 - r : 5 + r, i]
            assert np.array_equal(patch, kernel(spec, d))


def test_ramp_central_difference():
    w = 16
    ramp = np.tile(np.arange(w) / w, (8, 1))
    gx = gradient_extract(ramp, GradientSpec(("x",), operator="central_difference"))[..., 0]
    # interior is f(x+1) - f(x-1) up to sign of the convolution orientation
    assert np.allclose(np.abs(gx[:, 1:-1]), 2.0 / w)


def test_constant_gives_zero():
    out = gradient_extract(np.full((12, 12, 3), 0.4), SOBEL5)
    assert out.shape == (12, 12, 6)
    assert np.abs(out).max() < 1e-12


def test_channel_layout(rng):
    img = rng.random((8, 8, 3))
    out = gradient_extract(img, GradientSpec(("y", "x")))
    gx = gradient_extract(img, GradientSpec(("x",)))
    gy = gradient_extract(img, GradientSpec(("y",)))
    assert np.array_equal(out[..., :3], gx) and np.array_equal(out[..., 3:], gy)


def test_directionality():
    stripes_vertical = np.tile((np.arange(16) % 4) / 3.0, (16, 1))  # varies along x
    out = gradient_extract(stripes_vertical, SOBEL3)
    assert np.abs(out[..., 1]).max() < 1e-12
    assert np.abs(out[..., 0]).max() > 0.1


def test_spec_validation():
    with pytest.raises(ValueError):
        GradientSpec(kernel_size=7)
    with pytest.raises(ValueError):
        GradientSpec(operator="central_difference", kernel_size=5)
    with pytest.raises(ValueError):
        GradientSpec(directions=("z",))


@pytest.mark.parametrize("spec", [CD, SOBEL3, SOBEL5], ids=["cd", "sobel3", "sobel5"])
def test_spectral_equivalence(spec, natural_gray):
    assert gradient_transfer_equivalence(natural_gray, spec) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 40), st.integers(3, 40), st.integers(0, 10_000))
def test_spectral_equivalence_random(m, n, seed):
    img = np.random.default_rng(seed).random((m, n))
    assert gradient_transfer_equivalence(img, CD) < 1e-6


def test_central_difference_transfer_closed_form():
    n = 32
    h = np.fft.ifftshift(gradient_transfer(CD, (n, n), "x"))
    u = np.fft.fftfreq(n)[None, :]
    # convolving with [1, 0, -1] along x: exp(+j2piu) - exp(-j2piu)
    expected = np.broadcast_to(2j * np.sin(2 * np.pi * u), (n, n))
    assert np.abs(h - expected).max() < 1e-12


def test_x_gradient_spectrum_zero_on_u_axis(natural_gray):
    gx = gradient_extract(natural_gray, GradientSpec(("x",), operator="central_difference"))
    spec = dft2(gx[..., 0]).values
    centre_col = spec.shape[1] // 2
    assert np.abs(spec[:, centre_col]).max() < 1e-9


def _top_band_share(out, img_shape):
    d = distance_grid(img_shape)
    energy = np.zeros(img_shape)
    for c in range(out.shape[-1]):
        energy += np.abs(dft2(out[..., c]).values) ** 2
    return energy[d >= np.quantile(d, 0.75)].sum() / energy.sum()


def test_larger_kernel_suppresses_top_band():
    img = np.random.default_rng(7).random((128, 128))
    s3 = _top_band_share(gradient_extract(img, SOBEL3), img.shape)
    s5 = _top_band_share(gradient_extract(img, SOBEL5), img.shape)
    assert s5 < s3
