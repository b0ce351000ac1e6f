import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from upwind_sav import Grid, PotentialSpec, SchemeParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

POTENTIALS = [PotentialSpec.polynomial(), PotentialSpec.logarithmic(0.15),
              PotentialSpec.logarithmic(0.3), PotentialSpec.logarithmic(0.45)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def params(eps=0.02, dt=1e-4, pot=None, **kw):
    return SchemeParams(eps, dt, pot or PotentialSpec.polynomial(), **kw)


def line(n, length=1.0):
    return Grid.line(n, length)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "REPORT", None):
        terminalreporter.section("acceptance criteria")
        for line in mod.REPORT:
            terminalreporter.write_line(line)
