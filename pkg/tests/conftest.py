import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

import suites  # noqa: E402

settings.register_profile("ndtos", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ndtos")


def pytest_terminal_summary(terminalreporter):
    if not suites.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(suites.RESULTS):
        passed, detail = suites.RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
