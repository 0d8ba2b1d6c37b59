import numpy as np
import pytest
from hypothesis import settings

from hyperifs.corpus import load_system

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def systems():
    cache = {}

    def get(name, resolution=None):
        key = (name, resolution)
        if key not in cache:
            cache[key] = load_system(name, resolution)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    ok, _ = _CRITERIA.get(number, (True, title))
    if rep.when == "call" or rep.failed:
        _CRITERIA[number] = (ok and rep.passed, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
