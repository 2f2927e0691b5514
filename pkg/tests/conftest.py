import pytest

from endowment_hjb.hjb_solver import GridConfig, SchemeConfig, solve
from endowment_hjb.model import pension_params


@pytest.fixture(scope="session")
def params():
    return pension_params()


@pytest.fixture(scope="session")
def small_surface(params):
    """Coarse pension-example surface for fast structural tests."""
    return solve(params, GridConfig(nt=60, nz=80), SchemeConfig())


@pytest.fixture(scope="session")
def pension_surface(params):
    """Full-resolution pension-example surface (400 x 400 over z in [0.05, 50])."""
    return solve(params, GridConfig(nt=400, nz=400, z_min=0.05, z_max=50.0), SchemeConfig())


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        import sys
        mod = sys.modules.get("test_acceptance")
        RESULTS = getattr(mod, "RESULTS", [])
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
