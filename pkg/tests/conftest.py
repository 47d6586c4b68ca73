import sys
import time

SUITE_LIMIT_S = 300.0


def pytest_sessionstart(session):
    session.config._obbkit_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, config):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    wall = time.perf_counter() - config._obbkit_start
    verdict = "PASS" if wall < SUITE_LIMIT_S else "FAIL"
    terminalreporter.write_line(f"[{verdict}] session wall time {wall:.1f} s (limit {SUITE_LIMIT_S:g} s)")
