"""
Shared fixtures for caplaw tests.
"""

import numpy as np
import pytest

from caplaw import DiscreteModelFamily, GaussianMeanFamily, NFunctionSpec, LogMgfOracle


@pytest.fixture
def two_point_family():
    """Ω = {ω₁, ω₂} with measures (0.5, 0.5) and (0.8, 0.2)."""
    return DiscreteModelFamily([[0.5, 0.5], [0.8, 0.2]], outcome_count=2)


@pytest.fixture
def gaussian_family():
    return GaussianMeanFamily([-0.3, 0.0, 0.3], sigma=1.0)


@pytest.fixture
def single_normal():
    return GaussianMeanFamily([0.0], sigma=1.0)


@pytest.fixture
def exact_oracle(gaussian_family):
    return LogMgfOracle.exact_gaussian(gaussian_family)


@pytest.fixture
def phi2():
    return NFunctionSpec.phi_p(2)


@pytest.fixture
def phi3():
    return NFunctionSpec.phi_p(3)


@pytest.fixture
def y_grid():
    """201 points on [-10, 10]."""
    return np.linspace(-10.0, 10.0, 201)


@pytest.fixture
def symmetric_grid():
    """±{0.1, 0.2, ..., 5}."""
    positive = np.round(np.arange(1, 51) * 0.1, 10)
    return np.concatenate([-positive[::-1], positive])


@pytest.fixture
def output_dir(tmp_path):
    return str(tmp_path / 'out')
