"""
Pytest configuration for the Kato toolkit.
Closed-form oracles first; Monte Carlo runs use fixed seeds.
"""

import logging

import numpy as np
import pytest

from kato_toolkit.config import Config, MonteCarloConfig, SearchConfig, ToleranceConfig
from kato_toolkit.geometry import Domain, MeasureSpec, ProfileFunction
from kato_toolkit.kernels import ProcessSpec

# Set up logging for tests
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Pytest markers
def pytest_configure(config):
    """Configure pytest markers."""
    config.addinivalue_line("markers", "smoke: Quick validation tests")
    config.addinivalue_line("markers", "unit: Closed-form oracles and property checks per module")
    config.addinivalue_line("markers", "functional: Acceptance runs end to end")
    config.addinivalue_line("markers", "slow: Large Monte Carlo and grid runs")

@pytest.fixture
def rng():
    """Seeded random stream."""
    return np.random.default_rng(12345)

@pytest.fixture
def tol():
    return ToleranceConfig()

@pytest.fixture
def search():
    """Reduced sup-search limits for unit tests."""
    return SearchConfig(starts_per_dim=16, potential_starts=8, refine_top=2, max_iter=60)

@pytest.fixture
def quick_config(search, tmp_path):
    """Toolkit config with small search limits and reports under a temporary directory."""
    return Config(
        search=search,
        monte_carlo=MonteCarloConfig(paths=4000, dt=1e-2, batch_size=1000),
        seed=2024,
        out_dir=str(tmp_path / "reports"),
    )

@pytest.fixture
def processes():
    """Catalogued processes used across modules."""
    return {
        "brownian1": ProcessSpec.brownian(1),
        "brownian2": ProcessSpec.brownian(2),
        "brownian3": ProcessSpec.brownian(3),
        "cauchy1": ProcessSpec.stable(1.0, 1),
        "stable2": ProcessSpec.stable(1.0, 2),
        "relativistic3": ProcessSpec.relativistic(1.0, 1.0, 3),
    }

@pytest.fixture
def domains():
    return {
        "unit_ball3": Domain.ball([0.0, 0.0, 0.0], 1.0),
        "unit_disc": Domain.ball([0.0, 0.0], 1.0),
        "interval": Domain.interval(-1.0, 1.0),
        "unit_square": Domain.box([0.0, 0.0], [1.0, 1.0]),
        "strip": Domain.strip(2, 2, 1.0),
        "horn": Domain.horn(2, ProfileFunction(name="exp", scale=1.0, rate=1.0)),
    }

@pytest.fixture
def measures(domains):
    return {
        "lebesgue_ball3": MeasureSpec.lebesgue(domains["unit_ball3"], label="lebesgue:ball(0,1)"),
        "sphere3": MeasureSpec.sphere_surface([0.0, 0.0, 0.0], 1.0, label="sphere:r=1,d=3"),
        "atoms3": MeasureSpec.point_masses([([0.0, 0.0, 0.0], 1.0)], label="dirac"),
    }
