import pytest

# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def emit(line):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
