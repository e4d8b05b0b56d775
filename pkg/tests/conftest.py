import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relaycode.simulation import get_codebook  # noqa: E402


@pytest.fixture(scope="session")
def codebook_1000():
    return get_codebook("chan_sep_r12", "source_r12", 1000, 0.5, 0.5, 0)


@pytest.fixture(scope="session")
def codebook_2000():
    return get_codebook("chan_sep_r12", "source_r12", 2000, 0.5, 0.5, 0)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
