def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance-check result lines after the test summary.

    The checks print one line each as they run, but pytest's capture
    hides those unless -s is given; this keeps them visible either way.
    """
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.LINES:
        return
    terminalreporter.section("acceptance checks")
    for line in module.LINES:
        terminalreporter.write_line(line)
