import numpy as np
import pytest
import torch

from fair.errors import ConfigurationError, TrainingDivergedError
from fair.freqfilter import FilterSpec
from fair.gradfilter import GradientSpec
from fair.pipeline import (
    Detector, TrainConfig, extract, extractor_channels, extractor_from_dict, extractor_to_dict,
    infer, load_dataset, train,
)
from fair.restoration import NetConfig
from fair.scoring import ScoringConfig

TINY_NET = NetConfig(base_width_c=4, depth=2)


def tiny_config(**kw):
    base = dict(epochs=3, batch_size=2, image_size=16, extractor=FilterSpec("butterworth", 4, 2),
                net=TINY_NET, seed=1)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture
def images():
    r = np.random.default_rng(0)
    return [r.random((16, 16, 3)) for _ in range(4)]


def test_lr_schedule():
    cfg = TrainConfig(epochs=10, image_size=256)
    lrs = [cfg.lr_at(e) for e in range(10)]
    assert lrs[:8] == [1e-4] * 8
    assert lrs[8] == pytest.approx(2e-5) and lrs[9] == pytest.approx(4e-6)
    full = TrainConfig()
    assert full.lr_at(639) == 1e-4 and full.lr_at(640) == pytest.approx(2e-5)
    assert full.lr_at(720) == pytest.approx(4e-6)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(extractor=GradientSpec(), net=NetConfig(in_channels=3))
    with pytest.raises(ConfigurationError):
        TrainConfig(image_size=100)
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=0)


def test_extractor_helpers(rng):
    g = GradientSpec(("x",), 5)
    assert extractor_channels(g) == 3 and extractor_channels(GradientSpec()) == 6
    assert extractor_from_dict(extractor_to_dict(g)) == g
    f = FilterSpec("gaussian", 12)
    assert extractor_from_dict(extractor_to_dict(f)) == f
    assert extract(rng.random((8, 8, 3)), GradientSpec()).shape == (8, 8, 6)
    with pytest.raises(ConfigurationError):
        extractor_from_dict({"kind": "wavelet"})


def test_load_dataset_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_dataset(tmp_path, 16)
    assert load_dataset([np.zeros((8, 8, 3))], 16).shape == (1, 16, 16, 3)


def test_training_is_deterministic(images):
    a = train(images, tiny_config())
    b = train(images, tiny_config())
    assert a.loss_curve == b.loss_curve
    for pa, pb in zip(a.model.parameters(), b.model.parameters()):
        assert torch.equal(pa, pb)
    assert a.lr_curve == [1e-4, 1e-4, pytest.approx(2e-5)]


def test_resume_matches_uninterrupted(images, tmp_path):
    full = train(images, tiny_config(epochs=4))
    train(images, tiny_config(epochs=4), out_dir=tmp_path, max_epochs=2)
    resumed = train(images, tiny_config(epochs=4), resume=tmp_path / "last.pt")
    assert resumed.epochs_completed == 4
    assert np.allclose(resumed.loss_curve, full.loss_curve, rtol=1e-6)
    for pa, pb in zip(full.model.parameters(), resumed.model.parameters()):
        assert torch.allclose(pa, pb, atol=1e-6)


def test_checkpoints_written(images, tmp_path):
    rec = train(images, tiny_config(checkpoint_every=1), out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["epoch_0001.pt", "epoch_0002.pt", "epoch_0003.pt", "last.pt"]
    assert len(rec.checkpoints) == 4


def test_gradient_extractor_trains(images):
    rec = train(images, tiny_config(epochs=1, extractor=GradientSpec(),
                                    net=NetConfig(base_width_c=4, depth=2, in_channels=6)))
    assert np.isfinite(rec.loss_curve[0])


def test_nan_aborts(images):
    bad = [img.copy() for img in images]
    bad[0][0, 0, 0] = np.nan
    with pytest.raises(TrainingDivergedError, match="epoch 1"):
        train(bad, tiny_config(epochs=1, batch_size=4))


def test_detector_contracts(images, tmp_path):
    train(images, tiny_config(epochs=1), out_dir=tmp_path)
    det = Detector.load(tmp_path / "last.pt")
    assert det.image_size == 16
    res = det.infer(np.random.default_rng(1).random((40, 24, 3)))
    assert res.restored.shape == (16, 16, 3)
    assert res.anomaly_map.values.shape == (16, 16)
    assert res.image_score == res.anomaly_map.values.max()
    with pytest.raises(ValueError):
        det.infer(np.zeros((15, 16, 3)), resize_input=False)
    again = infer(tmp_path / "last.pt", images[0], ScoringConfig(smooth_ks=3))
    assert again.anomaly_map.values.shape == (16, 16)
    batch = det.infer_batch(images[:2])
    assert batch[1].image_score == det.infer(images[1]).image_score


@pytest.mark.slow
def test_toy_model_restores_normals(toy_detector, toy_category):
    from fair.imagecore import list_images, load_image

    img = load_image(list_images(toy_category / "test" / "good")[0])
    res = toy_detector.infer(img)
    assert np.mean((res.restored - img) ** 2) < 5e-3
