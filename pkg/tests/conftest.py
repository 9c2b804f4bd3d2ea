import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from savch.assembly import assemble_mass, assemble_stiffness  # noqa: E402
from savch.mesh import build_unit_square_mesh  # noqa: E402


@pytest.fixture(scope="session")
def mesh16():
    return build_unit_square_mesh(16)


@pytest.fixture(scope="session")
def ops16(mesh16):
    return assemble_mass(mesh16), assemble_stiffness(mesh16)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
