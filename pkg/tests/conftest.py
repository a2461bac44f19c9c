import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def graphene():
    from tbverdet.lattice import graphene_model

    return graphene_model()


@pytest.fixture(scope="session")
def standard_params():
    from tbverdet.contour import ThermoOpticalParams

    return ThermoOpticalParams(beta=10.0, mu=0.0, omega0=7.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = mod.pytest_terminal_lines() if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
