import math
import sys
from pathlib import Path

import pytest

from charnets import singular
from charnets.systems import NormalSystem

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def cps21():
    return NormalSystem.cps(2.0, 1.0)


@pytest.fixture(scope="session")
def depth3(cps21):
    return singular.build_singular_solution(cps21, 0.02, 3)


@pytest.fixture(scope="session")
def depth3_fine(cps21):
    return singular.build_singular_solution(cps21, 0.02, 3, resolution=2.0)


@pytest.fixture(scope="session")
def arcs(cps21):
    return singular.universal_arcs(cps21, 0.02)


def level_rho(system, r1, target=-0.25 * math.pi):
    return singular.level_point(system, r1, target)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
