import numpy as np
import pytest

from mvmocap.skeleton import default_template, default_topology
from mvmocap.synth import camera_ring
from mvmocap.voxel import EstimatorConfig


@pytest.fixture(scope="session")
def ring():
    return camera_ring()


@pytest.fixture(scope="session")
def topology():
    return default_topology()


@pytest.fixture(scope="session")
def template():
    return default_template()


@pytest.fixture
def config():
    return EstimatorConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
