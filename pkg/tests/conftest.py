import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from pipewft.gas_core import GasState, PressureLaw  # noqa: E402
from pipewft.junction import CouplingLaw  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=["isothermal", "gamma"])
def law(request):
    if request.param == "isothermal":
        return PressureLaw.isothermal(1.0)
    return PressureLaw.gamma_law(1.0, 1.4)


@pytest.fixture
def iso():
    return PressureLaw.isothermal(1.0)


@pytest.fixture
def claw():
    return CouplingLaw.smooth_section()


@pytest.fixture
def u_sub():
    return GasState(1.0, 0.3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
