import numpy as np
import pytest
from hypothesis import strategies as st

from curator.records import PredictionRecord, Region


def rec(item_id, *regions, view_id=None, cluster=None):
    """Build a record from (weight, prob) pairs."""
    return PredictionRecord(
        item_id, tuple(Region(float(w), tuple(float(x) for x in p)) for w, p in regions), view_id, cluster
    )


def random_prob(rng, C, sparsity=0.0):
    p = rng.dirichlet(np.ones(C) * rng.uniform(0.2, 2.0))
    if sparsity:
        p[rng.random(C) < sparsity] = 0.0
        if p.sum() == 0:
            p[rng.integers(C)] = 1.0
        p = p / p.sum()
    return p


@st.composite
def prob_vectors(draw, C=None, min_C=2, max_C=8):
    if C is None:
        C = draw(st.integers(min_C, max_C))
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=C, max_size=C))
    if sum(raw) == 0:
        raw[0] = 1.0
    total = sum(raw)
    return [x / total for x in raw]


@st.composite
def prob_pairs(draw):
    C = draw(st.integers(2, 8))
    return draw(prob_vectors(C=C)), draw(prob_vectors(C=C))


@st.composite
def records(draw, C=None, item_id=None):
    if C is None:
        C = draw(st.integers(2, 6))
    n = draw(st.integers(1, 5))
    regions = []
    for _ in range(n):
        w = draw(st.floats(1e-3, 100.0))
        regions.append((w, draw(prob_vectors(C=C))))
    if item_id is None:
        item_id = draw(st.text("abcxyz0123", min_size=1, max_size=6))
    return rec(item_id, *regions)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
