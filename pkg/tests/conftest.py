import time

import pytest

from weakhyp import runner, scenarios

_CACHE = {}
ACCEPTANCE_LINES = []


def scenario_results(name, *overrides, workers=None):
    """(results, seconds) for a built-in scenario; cached for the session."""
    key = (name, overrides, workers)
    if key not in _CACHE:
        cfg = scenarios.scenario_config(name, list(overrides))
        t0 = time.perf_counter()
        res = runner.execute(cfg, workers=workers)
        _CACHE[key] = (res, time.perf_counter() - t0)
    return _CACHE[key]


@pytest.fixture(scope="session")
def example1_run():
    return scenario_results("example1")[0]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
