import numpy as np
import pytest

from solenoid_kit.dynamics import AffineIFS, CircleMap, Subshift
from solenoid_kit.solenoid import OmegaFamily
from solenoid_kit.steps import StepFunction
from solenoid_kit.wavelet import as_step, haar, shannon

GOLDEN = Subshift(((1, 1), (1, 0)))
CANTOR = AffineIFS(3, (0, 2))


def haar_family(level=6):
    m0 = as_step(haar(), level)
    return OmegaFamily(m0, StepFunction.constant(m0.sys, 1, 1.0))


def shannon_family():
    m0 = shannon().m0
    return OmegaFamily(m0, StepFunction.constant(m0.sys, 1, 1.0))


def random_step(sys, depth, rng, complex_=False):
    n = StepFunction.constant(sys, depth, 0.0).size
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return StepFunction(sys, depth, v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["haar", "shannon"])
def prf_family(request):
    return haar_family() if request.param == "haar" else shannon_family()


@pytest.fixture
def circle2():
    return CircleMap(2)


ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line; it is printed now and in the summary."""
    def rec(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok
    return rec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
