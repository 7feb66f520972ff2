import functools

ACCEPTANCE: dict[int, tuple[str, str]] = {}


def criterion(number: int, title: str):
    """Record a PASS/FAIL line for an acceptance test, then re-raise any failure."""

    def wrap(test):
        @functools.wraps(test)
        def run(*args, **kwargs):
            try:
                test(*args, **kwargs)
            except BaseException:
                ACCEPTANCE[number] = ("FAIL", title)
                raise
            ACCEPTANCE[number] = ("PASS", title)

        return run

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
