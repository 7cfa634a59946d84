import pytest
from hypothesis import HealthCheck, settings

from timelens_hom import dispersion as dp
from timelens_hom import source as src

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def bbo():
    return dp.CrystalSpec.named("BBO", 20.0)


@pytest.fixture(scope="session")
def pump():
    return src.PumpSpec(405.0, fwhm_bandwidth_nm=0.2)


@pytest.fixture(scope="session")
def model(bbo, pump):
    return src.SourceModel.from_crystal(bbo, pump)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
