import numpy as np
import pytest
import torch

from fair.restoration import (
    NetConfig, build_model, count_parameters, load_checkpoint, loss, restore, save_checkpoint,
    ssim, to_tensor,
)

SMALL = NetConfig(base_width_c=8, depth=3)


def test_output_shape_and_width():
    model = build_model(SMALL, seed=0)
    out = model(torch.zeros(2, 3, 32, 32))
    assert out.shape == (2, 3, 32, 32)
    assert NetConfig(base_width_c=16).widths == [16, 32, 64, 128, 128]


def test_rejects_indivisible_input():
    model = build_model(SMALL, seed=0)
    with pytest.raises(ValueError):
        model(torch.zeros(1, 3, 30, 32))


def test_gradient_extractor_channels():
    model = build_model(NetConfig(base_width_c=8, depth=2, in_channels=6), seed=0)
    assert model(torch.zeros(1, 6, 16, 16)).shape == (1, 3, 16, 16)


def test_no_skip_variant_has_fewer_parameters():
    with_skips = count_parameters(build_model(SMALL))
    without = count_parameters(build_model(NetConfig(base_width_c=8, depth=3, use_skips=False)))
    # each decoder's first conv loses w_i input channels: 3 * 3 * w_i * w_i weights
    expected = sum(9 * w * w for w in SMALL.widths[:-1])
    assert with_skips - without == expected


def test_restore_clamps_and_is_deterministic(rng):
    model = build_model(SMALL, seed=1)
    x = rng.normal(size=(16, 16, 3)) * 5
    a, b = restore(model, x), restore(model, x)
    assert a.shape == (16, 16, 3)
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() <= 1


def test_batch_composition_independence(rng):
    model = build_model(SMALL, seed=1)
    xs = rng.random((3, 16, 16, 3))
    batch = restore(model, xs)
    assert np.abs(batch[1] - restore(model, xs[1])).max() < 1e-5


def test_ssim_matches_skimage(rng):
    metrics = pytest.importorskip("skimage.metrics")
    x = rng.random((32, 32, 3))
    y = np.clip(x + rng.normal(scale=0.1, size=x.shape), 0, 1)
    ours = float(ssim(to_tensor(x).double(), to_tensor(y).double()))
    ref = metrics.structural_similarity(x, y, channel_axis=2, data_range=1.0,
                                        gaussian_weights=True, sigma=1.5,
                                        use_sample_covariance=False)
    assert abs(ours - ref) < 1e-6


def test_loss_endpoints(rng):
    x = to_tensor(rng.random((16, 16, 3)))
    total, parts = loss(x, x)
    assert float(total) == pytest.approx(0.0, abs=1e-6)
    total, parts = loss(x + 0.1, x)
    assert float(parts["l2"]) == pytest.approx(0.01, rel=1e-5)
    assert float(total) >= float(parts["l2"])


def test_loss_shape_mismatch():
    with pytest.raises(ValueError):
        loss(torch.zeros(1, 3, 16, 16), torch.zeros(1, 3, 16, 8))


def loss_gradient_error(seed=0):
    """Max relative error of autograd vs central differences on a 4x4x3 patch."""
    g = torch.Generator().manual_seed(seed)
    clean = torch.rand(1, 3, 16, 16, generator=g, dtype=torch.float64)
    pred = (clean + 0.1 * torch.randn(1, 3, 16, 16, generator=g, dtype=torch.float64)).requires_grad_()
    total, _ = loss(pred, clean)
    total.backward()
    analytic = pred.grad[0, :, 6:10, 6:10].clone()
    numeric = torch.zeros_like(analytic)
    eps = 1e-6
    with torch.no_grad():
        for c in range(3):
            for i in range(4):
                for j in range(4):
                    p = pred.detach().clone()
                    p[0, c, 6 + i, 6 + j] += eps
                    up = loss(p, clean)[0]
                    p[0, c, 6 + i, 6 + j] -= 2 * eps
                    down = loss(p, clean)[0]
                    numeric[c, i, j] = (up - down) / (2 * eps)
    return float((analytic - numeric).norm() / numeric.norm())


def test_loss_gradient_check():
    assert loss_gradient_error() < 1e-3


def test_checkpoint_round_trip(tmp_path, rng):
    model = build_model(SMALL, seed=3)
    extractor = {"kind": "frequency", "family": "butterworth", "cutoff_d0": 30.0, "order_n": 2}
    path = tmp_path / "m.pt"
    save_checkpoint(path, model, extractor, {"epoch": 4}, train_config={"a": 1})
    loaded, payload = load_checkpoint(path)
    x = rng.random((16, 16, 3))
    assert np.array_equal(restore(model, x), restore(loaded, x))
    assert payload["progress"]["epoch"] == 4 and payload["extractor"] == extractor


def test_checkpoint_rejects_tampering(tmp_path):
    model = build_model(SMALL, seed=3)
    path = tmp_path / "m.pt"
    save_checkpoint(path, model, {"kind": "frequency"})
    payload = torch.load(path, weights_only=False)
    payload["extractor"]["kind"] = "gradient"
    torch.save(payload, path)
    with pytest.raises(ValueError):
        load_checkpoint(path)
    payload["format"] = "other"
    torch.save(payload, path)
    with pytest.raises(ValueError):
        load_checkpoint(path)
