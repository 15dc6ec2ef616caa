import pytest

# criterion id -> summary line, filled by the acceptance tests
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def record_acceptance():
    def record(cid: str, line: str) -> None:
        ACCEPTANCE_LINES[cid] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_LINES, key=lambda c: int(c[2:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[cid])
