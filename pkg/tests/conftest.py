import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line; the summary prints them at the end of the run."""
    results = request.config.stash[_RESULTS]

    def report(num: int, name: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {num:>2} {name}: {detail}"
        results.append((num, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results):
        terminalreporter.write_line(line)
