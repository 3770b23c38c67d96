import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)$")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number, name = int(match.group(1)), match.group(2).replace("_", " ")
    failed = report.failed
    if report.when == "call" or failed:
        previous = _results.get(number, (name, "PASS"))[1]
        status = "FAIL" if failed or previous == "FAIL" else ("SKIP" if report.skipped else "PASS")
        _results[number] = (name, status)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        name, status = _results[number]
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {name}")
