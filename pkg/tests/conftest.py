import numpy as np
import pytest

from quadobs.augmentation import build_augmented, compute_c_sequence, compute_gamma_table
from quadobs.harness import vehicle_scenario, vehicle_system
from quadobs.numerics import IntegrationGrid
from quadobs.signals import PrimitiveSignal, Sinusoid, cosine


@pytest.fixture(scope="session")
def vsys():
    return vehicle_system(3)


@pytest.fixture(scope="session")
def vaug(vsys):
    return build_augmented(vsys, compute_c_sequence(vsys))


@pytest.fixture(scope="session")
def vgam(vaug):
    return compute_gamma_table(vaug, 8)


@pytest.fixture(scope="session")
def vsig():
    # acceleration of (20 cos t - 20, 10 sin 2t + 20, -4 cos 4t)
    return PrimitiveSignal([[cosine(-20.0, 1.0)], [Sinusoid(-40.0, 2.0)], [cosine(64.0, 4.0)]], 10)


@pytest.fixture(scope="session")
def vgrid():
    return IntegrationGrid(0.0, 20.0, 1e-3)


@pytest.fixture(scope="session")
def vscenario():
    return vehicle_scenario(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
