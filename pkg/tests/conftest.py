import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criteria verdicts after the test summary."""
    module = next(
        (m for name, m in sys.modules.items()
         if name.endswith("test_acceptance") and hasattr(m, "RESULTS")),
        None,
    )
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
