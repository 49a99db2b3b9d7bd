"""Experiment configuration: a hierarchical YAML file with documented defaults.

Every key is listed in :data:`DEFAULTS`; unknown keys and wrongly typed values
are rejected with the dotted path of the offending field.  Environment
variables are never consulted.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .freqfilter import FilterSpec
from .gradfilter import GradientSpec
from .pipeline import TrainConfig, extractor_channels, extractor_from_dict
from .restoration import NetConfig
from .scoring import ScoringConfig
from .synth import CorruptionPolicy, CutPasteConfig, PerlinConfig, SynthConfig, TextureSource

FREQUENCY_KEYS = {"family", "cutoff_d0", "order_n"}
GRADIENT_KEYS = {"directions", "kernel_size", "operator"}

DEFAULTS = {
    "data": {
        "image_size": 256,          # square resize applied to train and test images
        "resize": True,             # resize test images instead of rejecting bad dims
    },
    "extractor": {
        "kind": "frequency",        # frequency | gradient
        "family": "butterworth",    # ideal | gaussian | butterworth
        "cutoff_d0": 30.0,
        "order_n": 2,
        "directions": ["x", "y"],   # gradient only
        "kernel_size": 3,           # gradient only: 3 | 5
        "operator": "sobel",        # gradient only: sobel | central_difference
    },
    "synth": {
        "policy": {"p_perlin": 0.5, "p_cutpaste": 0.25, "p_clean": 0.25},
        "perlin": {
            "lattice_scales": [2, 4, 8, 16],
            "threshold": 0.5,
            "beta_range": [0.2, 1.0],
            "area_band": [0.001, 0.5],
            "max_rotation": 90.0,
            "augment_texture": True,
            "max_tries": 100,
        },
        "cutpaste": {"max_area": 0.8},
        "texture": {"mode": "internal", "path": None},   # external needs path
    },
    "net": {
        "base_width_c": 128,
        "use_skips": True,
        "depth": 5,
    },
    "train": {
        "epochs": 800,
        "batch_size": 8,
        "lr": 1e-4,
        "lr_decay_points": [0.8, 0.9],
        "lr_decay_factor": 0.2,
        "betas": [0.9, 0.999],
        "seed": 0,
        "checkpoint_every": 0,      # 0: only the final checkpoint
    },
    "scoring": {
        "k": 3e-4,
        "smooth_ks": 21,
        "msgms_scales": 2,
        "use_color": True,
        "use_gradient": True,
    },
    "eval": {
        "fpr_limit": 0.3,
    },
}


def _check_type(value, default, path):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected a boolean, got {value!r}", path)
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", path)
    elif isinstance(default, float):
        if isinstance(value, str):
            # YAML 1.1 reads "1e-4" (no dot) as a string
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected a number, got {value!r}", path)
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", path)
    elif isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"expected a list, got {value!r}", path)
        value = list(value)
    return value


def _merge(defaults: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigurationError(f"expected a mapping, got {type(given).__name__}", path or "<root>")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigurationError("unknown key", sub)
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value or {}, sub)
        else:
            out[key] = _check_type(value, defaults[key], sub)
    return out


@dataclass
class ExperimentConfig:
    tree: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, data: dict | None) -> "ExperimentConfig":
        data = data or {}
        tree = _merge(DEFAULTS, data, "")
        kind = tree["extractor"]["kind"]
        ext_default = DEFAULTS["extractor"]
        given_ext = {k for k, v in (data.get("extractor") or {}).items()
                     if k in ext_default and v != ext_default[k]}
        if kind == "frequency":
            stray = given_ext & GRADIENT_KEYS
        elif kind == "gradient":
            stray = given_ext & FREQUENCY_KEYS
        else:
            raise ConfigurationError(f"unknown extractor kind {kind!r}", "extractor.kind")
        if stray:
            raise ConfigurationError(f"key not valid for a {kind} extractor",
                                     f"extractor.{sorted(stray)[0]}")
        cfg = cls(tree)
        cfg.train_config()  # surfaces value errors with paths
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}", "config")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}", "config") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.tree)

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.tree, sort_keys=False))

    def extractor(self) -> FilterSpec | GradientSpec:
        e = self.tree["extractor"]
        keys = FREQUENCY_KEYS if e["kind"] == "frequency" else GRADIENT_KEYS
        try:
            return extractor_from_dict({"kind": e["kind"], **{k: e[k] for k in keys}})
        except ValueError as exc:
            raise ConfigurationError(str(exc), "extractor") from exc

    def synth_config(self) -> SynthConfig:
        s = self.tree["synth"]
        p = dict(s["perlin"])
        for key in ("lattice_scales", "beta_range", "area_band"):
            p[key] = tuple(p[key])
        return SynthConfig(CorruptionPolicy(**s["policy"]), PerlinConfig(**p),
                           CutPasteConfig(**s["cutpaste"]))

    def texture_source(self) -> TextureSource:
        return TextureSource(**self.tree["synth"]["texture"])

    def scoring_config(self) -> ScoringConfig:
        return ScoringConfig(**self.tree["scoring"])

    def train_config(self, with_texture: bool = False) -> TrainConfig:
        """Build the :class:`TrainConfig`; ``with_texture`` also opens the texture source."""
        t = self.tree["train"]
        ext = self.extractor()
        try:
            net = NetConfig(in_channels=extractor_channels(ext), **self.tree["net"])
        except ValueError as exc:
            raise ConfigurationError(str(exc), "net") from exc
        texture = self.texture_source() if with_texture else TextureSource()
        return TrainConfig(
            epochs=t["epochs"], batch_size=t["batch_size"], lr=t["lr"],
            lr_decay_points=tuple(t["lr_decay_points"]), lr_decay_factor=t["lr_decay_factor"],
            betas=tuple(t["betas"]), seed=t["seed"], image_size=self.tree["data"]["image_size"],
            checkpoint_every=t["checkpoint_every"], extractor=ext, synth=self.synth_config(),
            texture=texture, net=net,
        )
