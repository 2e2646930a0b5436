import _support


def pytest_terminal_summary(terminalreporter):
    if not _support.CRITERIA_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok in sorted(_support.CRITERIA_RESULTS):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}")
