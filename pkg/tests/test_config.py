import tomllib

import pytest
from pydantic import ValidationError

from app.channel.models import SnapshotMatrix
from app.channel.simulator import CorrelationResult
from app.config import PROJECT_ROOT, AppConfig, Config, NemoSettings, config
from app.linalg.subspace import EigenDecomposition
from app.localizer.base import BaseLocalizer, LocalizationResult
from app.optimizer.de import DERunResult


def test_config_is_a_singleton():
    """Tests that every Config() returns the loaded instance."""
    assert Config() is config
    assert config.root_path == PROJECT_ROOT
    assert config.workspace_root == PROJECT_ROOT / "workspace"


def test_example_config_matches_the_settings_schema():
    """Tests that the shipped example parses into the settings models."""
    with (PROJECT_ROOT / "config" / "config.example.toml").open("rb") as f:
        raw = tomllib.load(f)
    log_level = raw.pop("logging")["level"]
    settings = AppConfig(**raw, log_level=log_level)

    assert settings.penalty.alpha == 1000.0 and settings.penalty.delta_min == 0.08
    assert settings.neef.population_per_source == 40
    assert settings.neef.early_stop is False
    assert settings.nemo.residual_floor == pytest.approx(1e-8)
    assert settings.music.angle_points == 200 and settings.music.range_points == 1000
    assert settings.music.refine is False and settings.music.refine_reach == 3.0
    assert settings.nemo.noise_margin == 1.0


def test_defaults_without_a_file():
    """Tests the built-in defaults."""
    settings = AppConfig()
    assert settings.de.population_size == 50
    assert settings.de.F == 0.5 and settings.de.Cr == 0.8
    assert settings.simulation.wavelength == 0.02
    assert settings.benchmark.record_runtime is True


def test_settings_validation():
    """Tests range checks on settings."""
    with pytest.raises(ValidationError):
        NemoSettings(min_residual_reduction=1.0)
    with pytest.raises(ValidationError):
        AppConfig(de={"population_size": 3})
    with pytest.raises(ValidationError):
        NemoSettings(noise_margin=-1.0)


@pytest.mark.parametrize(
    "model",
    [
        SnapshotMatrix,
        CorrelationResult,
        EigenDecomposition,
        DERunResult,
        LocalizationResult,
        BaseLocalizer,
    ],
)
def test_array_models_use_model_config(model):
    """Tests that models holding numpy arrays declare arbitrary types via model_config."""
    assert model.model_config.get("arbitrary_types_allowed") is True
    assert "Config" not in vars(model)
