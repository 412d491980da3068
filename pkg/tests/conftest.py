"""Shared pytest configuration.

Property tests that drive whole simulations can be slow on small CI
boxes, so the hypothesis deadline is disabled globally; determinism
comes from derandomize instead.
"""

from hypothesis import settings

settings.register_profile("snnfit", deadline=None, derandomize=True)
settings.load_profile("snnfit")

# one human-readable verdict per acceptance criterion, filled in by
# tests/test_acceptance.py and echoed after the test summary
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
