import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fair.errors import InvalidColorSpaceError
from fair.imagecore import (
    Image, load_image, pyramid, resize, save_image, to_gray, to_lab,
)

from oracles import scalar_lab


def test_lab_white_and_black():
    white = to_lab(np.ones((2, 3, 3)))
    assert np.allclose(white.L, 100.0, atol=1e-9)
    assert np.allclose(white.a, 0.0, atol=1e-9) and np.allclose(white.b, 0.0, atol=1e-9)
    black = to_lab(np.zeros((2, 2, 3)))
    assert np.all(black.L == 0) and np.all(black.a == 0) and np.all(black.b == 0)


def test_lab_red_matches_scalar_path():
    lab = to_lab(np.array([[[1.0, 0.0, 0.0]]]))
    L, a, b = scalar_lab(1.0, 0.0, 0.0)
    assert lab.L[0, 0] == pytest.approx(L, abs=1e-9)
    assert lab.a[0, 0] == pytest.approx(a, abs=1e-9)
    assert lab.b[0, 0] == pytest.approx(b, abs=1e-9)


def test_lab_matches_skimage_reference():
    color = pytest.importorskip("skimage.color")
    rgb = np.random.default_rng(3).random((8, 8, 3))
    ours = to_lab(rgb).stack()
    # skimage carries its own 6-digit matrix, so agreement is to a few 1e-2
    assert np.abs(ours - color.rgb2lab(rgb)).max() < 0.05


@pytest.mark.parametrize("g", np.linspace(0, 1, 11))
def test_gray_has_no_chroma(g):
    lab = to_lab(np.full((3, 3, 3), g))
    assert np.abs(lab.a).max() < 1e-3 and np.abs(lab.b).max() < 1e-3


def test_lab_rejects_other_color_spaces():
    with pytest.raises(InvalidColorSpaceError):
        to_lab(Image(np.zeros((2, 2, 3)), color_space="cielab"))
    with pytest.raises(InvalidColorSpaceError):
        to_lab(np.zeros((2, 2, 1)))


def test_image_invariants():
    with pytest.raises(ValueError):
        Image(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        Image(np.array([[[np.nan, 0, 0]]]))
    assert Image(np.zeros((4, 5))).shape == (4, 5, 1)


def test_resize_constant():
    out = resize(np.full((512, 512, 3), 0.5), 256, 256)
    assert out.shape == (256, 256, 3)
    assert np.abs(out - 0.5).max() < 1e-12


def test_resize_identity(rng):
    img = rng.random((37, 21, 3))
    assert np.abs(resize(img, 37, 21) - img).max() < 1e-6


def bilinear_at(img, y, x):
    # half-pixel centres, clamp to the border
    h, w = img.shape
    sy = min(max((y + 0.5) * h / 4 - 0.5, 0), h - 1)
    sx = min(max((x + 0.5) * w / 4 - 0.5, 0), w - 1)
    y0, x0 = math.floor(sy), math.floor(sx)
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = sy - y0, sx - x0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def test_resize_checkerboard_upsample():
    board = np.array([[0.0, 1.0], [1.0, 0.0]])
    expected = np.array([[bilinear_at(board, y, x) for x in range(4)] for y in range(4)])
    # worked by hand: sample rows at src 0, .25, .75, 1 (clamped)
    by_hand = np.array([
        [0.0, 0.25, 0.75, 1.0],
        [0.25, 0.375, 0.625, 0.75],
        [0.75, 0.625, 0.375, 0.25],
        [1.0, 0.75, 0.25, 0.0],
    ])
    assert np.allclose(expected, by_hand)
    assert np.allclose(resize(board, 4, 4), by_hand, atol=1e-12)


def test_resize_rejects_bad_dims():
    with pytest.raises(ValueError):
        resize(np.zeros((4, 4, 3)), 0, 4)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12), st.just(3)),
              elements=st.floats(0, 1)),
       st.integers(1, 20), st.integers(1, 20))
def test_resize_preserves_range(img, h, w):
    out = resize(img, h, w)
    assert out.shape == (h, w, 3)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_pyramid_constant():
    levels = pyramid(np.full((16, 16, 3), 0.3), 3)
    assert [lv.shape[:2] for lv in levels] == [(16, 16), (8, 8), (4, 4)]
    assert all(np.allclose(lv, 0.3) for lv in levels)


def test_pyramid_small_case():
    lv = pyramid(np.array([[0.0, 0.0], [1.0, 1.0]]), 2)
    assert lv[1].shape == (1, 1) and lv[1][0, 0] == 0.5


def test_pyramid_block_means(natural_image):
    lv = pyramid(natural_image, 2)[1]
    h, w = natural_image.shape[:2]
    brute = np.empty((h // 2, w // 2, 3))
    for i in range(h // 2):
        for j in range(w // 2):
            brute[i, j] = natural_image[2 * i : 2 * i + 2, 2 * j : 2 * j + 2].mean(axis=(0, 1))
    assert np.abs(lv - brute).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (16, 24), elements=st.floats(0, 1)), st.integers(1, 4))
def test_pyramid_shapes_and_mean(img, levels):
    for k, lv in enumerate(pyramid(img, levels)):
        assert lv.shape == (16 // 2**k, 24 // 2**k)
        assert abs(lv.mean() - img.mean()) < 1e-6


def test_pyramid_indivisible():
    with pytest.raises(ValueError):
        pyramid(np.zeros((6, 8)), 3)


def test_load_divides_by_255(tmp_path):
    arr = np.arange(48, dtype=np.uint8).reshape(4, 4, 3) * 5
    from PIL import Image as PILImage

    PILImage.fromarray(arr).save(tmp_path / "x.png")
    assert np.array_equal(load_image(tmp_path / "x.png"), arr / 255.0)
    save_image(tmp_path / "y.png", arr / 255.0)
    assert np.array_equal(load_image(tmp_path / "y.png"), arr / 255.0)


def test_to_gray_weights():
    assert to_gray(np.array([[[1.0, 0.0, 0.0]]]))[0, 0] == pytest.approx(0.299)
