import pytest
from hypothesis import settings

from lselab.potential import InteractionFamily, chain_family

settings.register_profile("lab", deadline=None, max_examples=40)
settings.load_profile("lab")


@pytest.fixture
def single_site():
    return InteractionFamily(d=1, R=1, diag=1.0)


@pytest.fixture
def chain():
    return chain_family(1.0, 0.2)


@pytest.fixture
def pair_family():
    """Unit diagonal with pair coefficient 0.2 on nearest neighbours (d^2U/dx0dx1 = 0.2)."""
    return InteractionFamily(d=1, R=1, diag=1.0, bonds={(1,): 0.2})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
