import numpy as np
import pytest

from genbaker import BakerMap, ExpandingMap, constant, linear, make_asymmetric_power, symmetric_power

# Frozen from an independent 128-bit bisection / fixed-point computation (mpmath).
ORACLE = {
    "linear": {
        "a": 0.5,
        "f(0.2)": 0.2254033307585166229641469,
        "x0": 0.4142135623730950488016887,
        "x0p": 0.5857864376269049511983113,
    },
    "symmetric_power_2": {
        "a": 0.5,
        "f(0.2)": 0.2058119300266938897536243,
        "x0": 0.4423111001984526544724334,
        "x0p": 0.5576888998015473455275666,
    },
    "asymmetric_power_1_2": {
        "a": 0.4583333333333333333333333,
        "x0": 0.3912476498790665714614308,
        "x0p": 0.5348706951012796636184877,
    },
}

CUTS = {
    "linear": linear,
    "symmetric_power_2": lambda: symmetric_power(2.0),
    "asymmetric_power_1_2": lambda: make_asymmetric_power(1.0, 2.0),
    "symmetric_power_0.5": lambda: symmetric_power(0.5),
    "asymmetric_power_3_1.5": lambda: make_asymmetric_power(3.0, 1.5),
}


@pytest.fixture(params=sorted(CUTS))
def cut(request):
    return CUTS[request.param]()


@pytest.fixture
def emap(cut):
    return ExpandingMap(cut)


@pytest.fixture
def lin_map():
    return ExpandingMap(linear())


@pytest.fixture
def sp2_map():
    return ExpandingMap(symmetric_power(2.0))


@pytest.fixture
def baker_const():
    return BakerMap(ExpandingMap(constant(0.5)))


@pytest.fixture
def baker_lin():
    return BakerMap(ExpandingMap(linear()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance reporting -------------------------------------------------------------
ACCEPTANCE = []
NOTES = []


def record(label, passed, detail, seconds, limit):
    """Store one acceptance line; the runtime limit is part of the verdict."""
    ok = bool(passed) and seconds < limit
    ACCEPTANCE.append((label, ok, f"{detail}; {seconds:.1f} s (limit {limit:g} s)"))
    print(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}; {seconds:.1f} s")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE, key=lambda r: _order(r[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
    for note in NOTES:
        terminalreporter.write_line(f"note  {note}")
    passed = sum(ok for _, ok, _ in ACCEPTANCE)
    terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE)} acceptance lines pass")


def _order(label):
    num = label.split()[1]
    digits = "".join(ch for ch in num if ch.isdigit())
    return (int(digits), num)
