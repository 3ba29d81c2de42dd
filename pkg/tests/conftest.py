import functools
import math
import re

from twint.simulation import ScenarioConfig, run_scenario

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_acceptance: dict[int, tuple[str, str]] = {}


@functools.lru_cache(maxsize=None)
def scenario_table(n: int, true_df: float = math.inf, replicates: int = 200, seed: int = 1):
    """Estimate tables are costly; share them across test modules."""
    return run_scenario(ScenarioConfig(n, true_df, replicates, seed))


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number, name = int(m.group(1)), m.group(2)
    if report.failed:
        _acceptance[number] = (name, "FAIL")
    elif report.when == "call" and report.passed:
        _acceptance[number] = (name, "PASS")
    elif report.skipped:
        _acceptance[number] = (name, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        name, outcome = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d} {name}: {outcome}")
