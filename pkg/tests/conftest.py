import pytest

from secretcache.protocol import simulate
from secretcache.topology import Association, SystemParams

_acceptance: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and (rep.when == "call" or rep.failed):
        _acceptance.append((marker.args[0], "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _acceptance:
        terminalreporter.write_line(f"{status}  {label}")


@pytest.fixture(scope="session")
def example1():
    params = SystemParams.from_memory(3, 3, 2, 3)
    assoc = Association.from_groups([[1, 2], [3]])
    return simulate(params, assoc, [1, 2, 3], seed=11)


@pytest.fixture(scope="session")
def example2():
    params = SystemParams.from_memory(8, 8, 4, 8, file_bits=48)
    assoc = Association.from_groups([[1, 2, 3], [4, 5], [6, 7], [8]])
    return simulate(params, assoc, range(1, 9), seed=22)
