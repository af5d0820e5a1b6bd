import pytest
from hypothesis import HealthCheck, settings

from pamflat.config import ExperimentConfig
from pamflat.muscle import MuscleParams
from pamflat.platform import PlatformGeometry

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def params():
    return MuscleParams()


@pytest.fixture
def geom():
    return PlatformGeometry()


@pytest.fixture
def cfg():
    return ExperimentConfig()


@pytest.fixture
def geom_unit():
    """R/J = 1, handy for hand-evaluated torque matrices."""
    return PlatformGeometry(R=0.2, J=0.2)


@pytest.fixture
def params_short():
    """R/l0 = 0.1 with the default geometry radius (R=0.2 -> l0=2.0)."""
    return MuscleParams(l0=2.0)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
