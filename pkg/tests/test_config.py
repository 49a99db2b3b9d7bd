import pytest
import yaml

from fair.config import DEFAULTS, ExperimentConfig
from fair.errors import ConfigurationError
from fair.gradfilter import GradientSpec


def test_defaults_build():
    cfg = ExperimentConfig.from_dict({})
    tc = cfg.train_config()
    assert tc.epochs == 800 and tc.net.base_width_c == 128 and tc.extractor.cutoff_d0 == 30.0
    assert cfg.scoring_config().k == 3e-4


def test_round_trip(tmp_path):
    cfg = ExperimentConfig.from_dict({"train": {"epochs": 5}, "net": {"base_width_c": 8}})
    cfg.dump(tmp_path / "c.yaml")
    again = ExperimentConfig.load(tmp_path / "c.yaml")
    assert again.to_dict() == cfg.to_dict()


def test_unknown_key_has_path():
    with pytest.raises(ConfigurationError, match=r"synth\.perlin\.thresh"):
        ExperimentConfig.from_dict({"synth": {"perlin": {"thresh": 0.4}}})


def test_wrong_type_has_path():
    with pytest.raises(ConfigurationError, match=r"train\.epochs"):
        ExperimentConfig.from_dict({"train": {"epochs": "many"}})
    with pytest.raises(ConfigurationError, match=r"scoring\.use_color"):
        ExperimentConfig.from_dict({"scoring": {"use_color": 1}})


def test_yaml_exponent_string(tmp_path):
    (tmp_path / "c.yaml").write_text("train:\n  lr: 1e-4\n")
    assert ExperimentConfig.load(tmp_path / "c.yaml").train_config().lr == 1e-4


def test_gradient_extractor_sets_channels():
    cfg = ExperimentConfig.from_dict({"extractor": {"kind": "gradient", "directions": ["x"],
                                                    "kernel_size": 5}})
    tc = cfg.train_config()
    assert tc.extractor == GradientSpec(("x",), 5) and tc.net.in_channels == 3


def test_stray_extractor_key():
    with pytest.raises(ConfigurationError, match="extractor.kernel_size"):
        ExperimentConfig.from_dict({"extractor": {"kind": "frequency", "kernel_size": 5}})


def test_value_errors_surface_as_config_errors():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"extractor": {"cutoff_d0": -1.0}})
    with pytest.raises(ConfigurationError, match="synth.policy"):
        ExperimentConfig.from_dict({"synth": {"policy": {"p_perlin": 0.9}}})
    with pytest.raises(ConfigurationError, match="data.image_size"):
        ExperimentConfig.from_dict({"data": {"image_size": 100}})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="config"):
        ExperimentConfig.load(tmp_path / "nope.yaml")


def test_texture_checked_only_on_request(tmp_path):
    cfg = ExperimentConfig.from_dict({"synth": {"texture": {"mode": "external",
                                                            "path": str(tmp_path / "none")}}})
    cfg.train_config()
    with pytest.raises(ConfigurationError, match="synth.texture.path"):
        cfg.train_config(with_texture=True)


def test_shipped_default_config_matches():
    from pathlib import Path

    shipped = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"
    assert yaml.safe_load(shipped.read_text()) == DEFAULTS
