import numpy as np
import pytest

from pirgrid.specdb import DbGeometry, generate_synthetic

_acceptance_lines = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    outcome = "PASS" if call.excinfo is None else "FAIL"
    _acceptance_lines.append((number, title, outcome, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    verdicts = {}
    for number, title, outcome, _ in _acceptance_lines:
        prev = verdicts.get(number, (title, "PASS"))[1]
        verdicts[number] = (title, "FAIL" if "FAIL" in (prev, outcome) else "PASS")
    for number in sorted(verdicts):
        title, outcome = verdicts[number]
        terminalreporter.write_line(f"[{outcome}] criterion {number}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_db():
    return generate_synthetic(DbGeometry.build(4, 4, 3, 2, 24), seed=11)


@pytest.fixture(scope="session")
def db_256():
    return generate_synthetic(DbGeometry.build(4, 4, 4, 4, 64), seed=5)
