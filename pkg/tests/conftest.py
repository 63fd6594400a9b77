import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reliquant.domain import FieldSpec, InputDomain  # noqa: E402

FIG1 = """\
event A p={a}
event B p=1e-2
event C p=1e-5
gate g1 and A B
gate top_or or g1 C
top top_or
"""


def fig1_text(a="1e-31"):
    return FIG1.format(a=a)


def monitor_domain(sizes):
    """Three int fields of the given sizes followed by three flags."""
    names = ("temp", "pressure", "rate")
    fields = [FieldSpec.int_range(n, 0, s - 1) for n, s in zip(names, sizes)]
    fields += [FieldSpec.flag(n) for n in ("override", "armed", "sensor_ok")]
    return InputDomain(tuple(fields))


@pytest.fixture
def domain16():
    return monitor_domain((32, 32, 8))


@pytest.fixture
def domain20():
    return monitor_domain((128, 64, 16))


# -- acceptance reporting ----------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "setup" and not rep.passed or rep.when == "call":
        _criteria[number] = (title, "PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, verdict, duration = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}  ({duration:.2f} s)")


def timed(func, *args, repeat=1):
    """Best wall time of ``repeat`` calls and the last result."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = func(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result
