import pytest

_VERDICT_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICT_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the end-of-run acceptance summary."""
    lines = request.config.stash[_VERDICT_KEY]

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
