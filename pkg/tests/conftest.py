import numpy as np
import pytest
import torch

from fair.imagecore import resize


@pytest.fixture(autouse=True, scope="session")
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def natural_image():
    skdata = pytest.importorskip("skimage.data")
    return resize(skdata.astronaut() / 255.0, 256, 256)


@pytest.fixture(scope="session")
def natural_gray(natural_image):
    return natural_image @ np.array([0.299, 0.587, 0.114])


# Toy benchmark shared by the slow tests: one texture category at 64 px.
# The cutoff is scaled with the image (30 at 256 px -> 7.5 at 64 px).
TOY_SIZE = 64
TOY_D0 = 7.5


def toy_train_config(**overrides):
    from fair.freqfilter import FilterSpec
    from fair.pipeline import TrainConfig
    from fair.restoration import NetConfig

    kw = dict(epochs=200, batch_size=8, image_size=TOY_SIZE,
              extractor=FilterSpec("butterworth", TOY_D0, 2), net=NetConfig(base_width_c=32))
    kw.update(overrides)
    return TrainConfig(**kw)


@pytest.fixture(scope="session")
def toy_category(tmp_path_factory):
    from fair import toydata

    return toydata.make_category(tmp_path_factory.mktemp("toy") / "weave", seed=0, size=TOY_SIZE,
                                 n_train=8, n_test_good=10, n_test_bad=10)


@pytest.fixture(scope="session")
def toy_run(toy_category):
    """8 images, batch 8, 200 epochs: 200 optimiser steps."""
    from fair.pipeline import train

    return train(toy_category / "train" / "good", toy_train_config())


@pytest.fixture(scope="session")
def toy_detector(toy_run):
    from fair.pipeline import Detector

    return Detector(toy_run.model, toy_train_config().extractor, TOY_SIZE)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key:2d}: {detail}")
