"""Shared fixtures: a small labelled dataset so slow generator calls happen once."""

import numpy as np
import pytest

from spectemp.synthgen import BeamConfig, generate


@pytest.fixture(scope="session")
def small_config() -> BeamConfig:
    return BeamConfig(duration=1.5, n_trials=5, seed=7)


@pytest.fixture(scope="session")
def small_signals(small_config):
    """25 short labelled signals (5 classes x 5 trials)."""
    return generate(small_config)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
