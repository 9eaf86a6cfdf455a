"""Shared fixtures: a fast reduced-size config and cached full-size runs."""

import warnings

import pytest

from mdcl.config import PipelineConfig

# The spec-default undulation amplitude trips the smallness warning for the
# default geometry (head offset 0.15 m); that is expected behavior, not a
# test failure.
warnings.filterwarnings(
    "ignore", message="undulation amplitude is not small")


def small_config() -> PipelineConfig:
    """Reduced-size config for fast unit tests (256 x 256 frame)."""
    cfg = PipelineConfig()
    cfg.radar.slow_samples = 256
    cfg.radar.fast_samples = 256
    cfg.detector.render_rows = 256
    cfg.noise.enabled = False
    cfg.validate()
    return cfg


@pytest.fixture
def cfg_small() -> PipelineConfig:
    return small_config()


@pytest.fixture(scope="session")
def clean_full_config() -> PipelineConfig:
    """Full-size clean-pipeline config (no raw-data noise)."""
    cfg = PipelineConfig()
    cfg.noise.enabled = False
    cfg.validate()
    return cfg


@pytest.fixture(scope="session")
def clean_results(clean_full_config):
    """Full-size clean pipeline results for S2..S12, computed once."""
    from mdcl.pipeline import run_activity

    labels = [f"S{i}" for i in range(2, 13)]
    return {label: run_activity(clean_full_config, label, i)
            for i, label in enumerate(labels)}
