"""Training loop, inference, and the high-frequency extractor glue.

One training step: corrupt each clean image (synth), extract its high-frequency
component, restore it with the UNet, and score the restoration against the
*clean* image with ``l2 + (1 - SSIM)``.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import restoration, scoring, synth
from .errors import ConfigurationError, TrainingDivergedError
from .freqfilter import FilterSpec, highpass
from .gradfilter import GradientSpec, gradient_extract
from .imagecore import as_array, list_images, load_image, resize
from .restoration import NetConfig
from .synth import SynthConfig, TextureSource

log = logging.getLogger(__name__)

INIT_SCHEME = "pytorch-default (kaiming_uniform, a=sqrt(5))"


def extractor_channels(spec, image_channels: int = 3) -> int:
    if isinstance(spec, GradientSpec):
        return image_channels * len(spec.directions)
    return image_channels


def extract(img, spec) -> np.ndarray:
    """High-frequency component of ``img`` under a FilterSpec or GradientSpec."""
    if isinstance(spec, GradientSpec):
        return gradient_extract(img, spec)
    if isinstance(spec, FilterSpec):
        return highpass(img, spec)
    raise TypeError(f"unknown extractor spec {spec!r}")


def extractor_to_dict(spec) -> dict:
    if isinstance(spec, GradientSpec):
        return {"kind": "gradient", **spec.to_dict()}
    return {"kind": "frequency", **spec.to_dict()}


def extractor_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", "frequency")
    if kind == "frequency":
        return FilterSpec(**d)
    if kind == "gradient":
        d["directions"] = tuple(d.get("directions", ("x", "y")))
        return GradientSpec(**d)
    raise ConfigurationError(f"unknown extractor kind {kind!r}", "extractor.kind")


@dataclass
class TrainConfig:
    epochs: int = 800
    batch_size: int = 8
    lr: float = 1e-4
    lr_decay_points: tuple = (0.8, 0.9)
    lr_decay_factor: float = 0.2
    betas: tuple = (0.9, 0.999)
    seed: int = 0
    image_size: int = 256
    checkpoint_every: int = 0
    extractor: FilterSpec | GradientSpec = field(default_factory=FilterSpec)
    synth: SynthConfig = field(default_factory=SynthConfig)
    texture: TextureSource = field(default_factory=TextureSource)
    net: NetConfig = field(default_factory=NetConfig)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ConfigurationError("epochs, batch_size and lr must be positive", "train")
        want = extractor_channels(self.extractor)
        if self.net.in_channels != want:
            raise ConfigurationError(
                f"net.in_channels={self.net.in_channels} but the extractor yields {want} channels",
                "net.in_channels")
        if self.image_size % self.net.size_multiple:
            raise ConfigurationError(
                f"image_size {self.image_size} not divisible by {self.net.size_multiple}",
                "data.image_size")

    def lr_at(self, epoch: int) -> float:
        """Learning rate for 0-based ``epoch``: decays after each listed fraction of epochs."""
        n_decays = sum(epoch >= round(p * self.epochs) for p in self.lr_decay_points)
        return self.lr * self.lr_decay_factor**n_decays

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs, "batch_size": self.batch_size, "lr": self.lr,
            "lr_decay_points": list(self.lr_decay_points), "lr_decay_factor": self.lr_decay_factor,
            "betas": list(self.betas), "seed": self.seed, "image_size": self.image_size,
            "checkpoint_every": self.checkpoint_every,
            "extractor": extractor_to_dict(self.extractor),
            "synth": asdict(self.synth),
            "texture": {"mode": self.texture.mode, "path": self.texture.path},
            "net": asdict(self.net),
        }


@dataclass
class RunRecord:
    loss_curve: list = field(default_factory=list)
    l2_curve: list = field(default_factory=list)
    ssim_curve: list = field(default_factory=list)
    lr_curve: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    init_scheme: str = INIT_SCHEME

    @property
    def epochs_completed(self) -> int:
        return len(self.loss_curve)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def load_dataset(source, image_size: int) -> np.ndarray:
    """Stack training images as ``(N, S, S, 3)``; ``source`` is a dir or arrays."""
    if isinstance(source, (str, Path)):
        files = list_images(source) if Path(source).is_dir() else []
        images = [load_image(p, size=(image_size, image_size)) for p in files]
    else:
        images = [resize(as_array(im), image_size, image_size) for im in source]
    if not images:
        raise ConfigurationError(f"no training images found in {source}", "data")
    return np.stack(images)


def make_batch(images, indices, epoch_seed, cfg: TrainConfig):
    samples = [synth.corrupt(images[i], synth.sample_rng(epoch_seed, i), cfg.texture, cfg.synth)
               for i in indices]
    x = np.stack([extract(s.corrupted, cfg.extractor) for s in samples])
    y = np.stack([s.clean for s in samples])
    return restoration.to_tensor(x), restoration.to_tensor(y)


def train(dataset, cfg: TrainConfig, out_dir=None, resume=None, max_epochs=None) -> RunRecord:
    """Train a restoration model.

    Args:
        dataset: directory of normal images, or a sequence of image arrays.
        cfg: training configuration.
        out_dir: where checkpoints go; nothing is written when ``None``.
        resume: checkpoint to continue from (model, optimizer, loss history).
        max_epochs: stop after this many epochs in total (the schedule still
            follows ``cfg.epochs``), used to interrupt and resume runs.

    The final model is attached to the returned record as ``record.model``.
    """
    images = load_dataset(dataset, cfg.image_size)
    n = len(images)
    model = restoration.build_model(cfg.net, seed=cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=tuple(cfg.betas))
    record = RunRecord(config=cfg.to_dict())
    start = 0
    if resume is not None:
        payload = torch.load(resume, map_location="cpu", weights_only=False)
        model.load_state_dict(payload["state_dict"])
        opt.load_state_dict(payload["optimizer"])
        prev = payload["progress"]
        start = prev["epoch"]
        for key in ("loss_curve", "l2_curve", "ssim_curve", "lr_curve", "epoch_seconds"):
            setattr(record, key, list(prev.get(key, [])))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    extractor = extractor_to_dict(cfg.extractor)
    steps = math.ceil(n / cfg.batch_size)
    stop = cfg.epochs if max_epochs is None else min(cfg.epochs, max_epochs)

    def checkpoint(name):
        path = out_dir / name
        progress = {"epoch": record.epochs_completed, **{k: getattr(record, k) for k in
                    ("loss_curve", "l2_curve", "ssim_curve", "lr_curve", "epoch_seconds")}}
        restoration.save_checkpoint(path, model, extractor, progress, opt.state_dict(), record.config)
        if str(path) not in record.checkpoints:
            record.checkpoints.append(str(path))

    for epoch in range(start, stop):
        t0 = time.perf_counter()
        lr = cfg.lr_at(epoch)
        for group in opt.param_groups:
            group["lr"] = lr
        epoch_seed = (cfg.seed, epoch)
        order = np.random.default_rng([cfg.seed, epoch, 2**31]).permutation(n)
        model.train()
        sums = np.zeros(3)
        for s in range(steps):
            idx = order[s * cfg.batch_size : (s + 1) * cfg.batch_size]
            x, y = make_batch(images, idx, epoch_seed, cfg)
            total, parts = restoration.loss(model(x), y)
            total_value = total.detach()
            if not torch.isfinite(total_value):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch + 1} step {s + 1} (lr={lr:g}): "
                    f"l2={float(parts['l2'])}, ssim={float(parts['ssim'])}")
            opt.zero_grad()
            total.backward()
            opt.step()
            sums += [float(total_value), float(parts["l2"]), float(parts["ssim"])]
        mean = sums / steps
        record.loss_curve.append(mean[0])
        record.l2_curve.append(mean[1])
        record.ssim_curve.append(mean[2])
        record.lr_curve.append(lr)
        record.epoch_seconds.append(time.perf_counter() - t0)
        log.info("epoch %d/%d loss %.5f lr %.2g", epoch + 1, cfg.epochs, mean[0], lr)
        if out_dir is not None and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            checkpoint(f"epoch_{epoch + 1:04d}.pt")
    if out_dir is not None:
        checkpoint("last.pt")
    record.model = model
    return record


@dataclass
class InferenceResult:
    restored: np.ndarray
    anomaly_map: scoring.AnomalyMap
    image_score: float


class Detector:
    """A trained model together with the extractor it was trained with."""

    def __init__(self, model, extractor, image_size=None, scoring_config=None):
        self.model = model
        self.extractor = extractor
        self.image_size = image_size
        self.scoring = scoring_config or scoring.ScoringConfig()

    @classmethod
    def load(cls, path, scoring_config=None):
        model, payload = restoration.load_checkpoint(path)
        image_size = (payload.get("train_config") or {}).get("image_size")
        return cls(model, extractor_from_dict(payload["extractor"]), image_size, scoring_config)

    def prepare(self, img, resize_input: bool = True) -> np.ndarray:
        img = as_array(img)
        m = self.model.config.size_multiple
        if resize_input and self.image_size and img.shape[:2] != (self.image_size, self.image_size):
            return resize(img, self.image_size, self.image_size)
        if img.shape[0] % m or img.shape[1] % m:
            raise ValueError(f"image dims {img.shape[:2]} not divisible by {m}; enable resizing")
        return img

    def infer(self, img, resize_input: bool = True) -> InferenceResult:
        img = self.prepare(img, resize_input)
        restored = restoration.restore(self.model, extract(img, self.extractor))
        amap = scoring.anomaly_map(img, restored, self.scoring)
        return InferenceResult(restored, amap, scoring.image_score(amap))

    def infer_batch(self, images, resize_input: bool = True) -> list[InferenceResult]:
        return [self.infer(img, resize_input) for img in images]


def infer(checkpoint, img, scoring_config=None, resize_input: bool = True) -> InferenceResult:
    """Restore and score one image with a checkpoint path or a loaded :class:`Detector`."""
    det = checkpoint if isinstance(checkpoint, Detector) else Detector.load(checkpoint, scoring_config)
    return det.infer(img, resize_input)
