import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record ``(number, passed, detail)`` and print a one-line verdict."""
    log = request.config.stash[_KEY]

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"acceptance {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        log.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_KEY, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log, key=lambda t: t[0]):
            terminalreporter.write_line(line)
