import sys

import pytest

from weightcalc.numerics import make_log_grid
from weightcalc.weights import WeightFunction

BUILTINS = {
    "omega0": WeightFunction.omega0(),
    "log2": WeightFunction.loga(2),
    "gevrey1.5": WeightFunction.gevrey_weight(1.5),
    "gevrey2": WeightFunction.gevrey_weight(2),
    "gevrey3": WeightFunction.gevrey_weight(3),
    "power1/3": WeightFunction.power(1 / 3),
    "power1/2": WeightFunction.power(0.5),
    "power2/3": WeightFunction.power(2 / 3),
}


@pytest.fixture(scope="session")
def grid():
    return make_log_grid(1.0, 1e8, 512)


@pytest.fixture(params=sorted(BUILTINS))
def builtin(request):
    return BUILTINS[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
