from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from vgbs_jsj.io import parse
from vgbs_jsj.lattice import IntMatrix

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def load(name: str):
    return parse((FIXTURES / name).read_text())


def read(name: str) -> str:
    return (FIXTURES / name).read_text()


def M(rows) -> IntMatrix:
    return IntMatrix.from_rows(rows)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def unimodular(draw, n: int | None = None, steps: int = 6):
    """Random element of GL_n(Z): signed permutation times elementary operations."""
    if n is None:
        n = draw(st.integers(1, 4))
    perm = draw(st.permutations(list(range(n))))
    signs = draw(st.lists(st.sampled_from([1, -1]), min_size=n, max_size=n))
    m = [[signs[i] if perm[i] == j else 0 for j in range(n)] for i in range(n)]
    if n > 1:
        for _ in range(draw(st.integers(0, steps))):
            i, j = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
            if i != j:
                c = draw(st.integers(-2, 2))
                for k in range(n):
                    m[i][k] += c * m[j][k]
    return IntMatrix.from_rows(m, cols=n)


@st.composite
def int_matrix(draw, rows=None, cols=None, lo=-5, hi=5):
    r = draw(st.integers(1, 4)) if rows is None else rows
    c = draw(st.integers(1, 4)) if cols is None else cols
    data = draw(st.lists(st.lists(st.integers(lo, hi), min_size=c, max_size=c), min_size=r, max_size=r))
    return IntMatrix.from_rows(data, cols=c)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
