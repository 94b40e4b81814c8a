import pytest

from optomod.params import Config, ModulationSpec, derive, reference_system


@pytest.fixture(scope="session")
def system():
    return reference_system()


@pytest.fixture(scope="session")
def derived(system):
    return derive(system)


@pytest.fixture(scope="session")
def config():
    return Config()


def single(eps, factor=2.0):
    sys = reference_system()
    return ModulationSpec.single(eps, factor * sys.omega_m)
