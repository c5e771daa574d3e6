ACCEPTANCE = {}


def record(number, ok, detail):
    """Store one acceptance outcome; the summary hook prints them in order."""
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
