import acclog


def pytest_terminal_summary(terminalreporter):
    if acclog.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acclog.LINES):
            terminalreporter.write_line(line)
