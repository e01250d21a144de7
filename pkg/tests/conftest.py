import pytest

from shtrim import clique as C
from shtrim import share as S


class Names:
    """Variable name <-> index table for writing abstractions as text."""

    def __init__(self, names: str):
        self.order = names.split()
        self.index = {n: i for i, n in enumerate(self.order)}
        self.names = dict(enumerate(self.order))

    def mask(self, names: str) -> int:
        return sum(1 << self.index[n] for n in names.replace(",", " ").split())

    def sh(self, text: str, domain: str | None = None):
        dom = self.order if domain is None else domain.replace(",", " ").split()
        return S.parse_sharing(text, self.index, dom)

    def cl(self, text: str, domain: str | None = None):
        dom = self.order if domain is None else domain.replace(",", " ").split()
        return C.parse_clique(text, self.index, dom)

    def txt(self, a) -> str:
        return S.to_text(a, self.names)


@pytest.fixture
def names():
    return Names


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
