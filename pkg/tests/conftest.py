import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# lines appended by the acceptance tests and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda text: int(text.split()[2])):
            terminalreporter.write_line(line)
