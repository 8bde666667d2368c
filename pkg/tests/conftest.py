import numpy as np
import pytest

from zerotwo.algebra import AlgebraShape
from zerotwo.superop import ByConstruction, SuperOperator

_criteria: dict[int, tuple[str, str]] = {}


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
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else "FAIL"
        prev = _criteria.get(number)
        if prev is None or prev[1] == "PASS":
            _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}")


def as_superop(raw, certificate="test-kraus") -> SuperOperator:
    """Tabulate an oracle map as a certified SuperOperator."""
    shape = AlgebraShape(raw.dims, raw.weights)
    return SuperOperator.from_blockmap(shape, shape, raw.blocks_out, ByConstruction(certificate))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
