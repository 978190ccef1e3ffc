from __future__ import annotations

import pytest

from syncstego import CandidatePool, Token


def make_pool(entries, normalized=True) -> CandidatePool:
    """Build a candidate pool from (subword, prob) pairs, ids in entry order."""
    tokens = [Token(i, sub.encode("utf-8")) for i, (sub, _) in enumerate(entries)]
    return CandidatePool(tokens, [p for _, p in entries], normalized=normalized)


WORKED_EXAMPLE = [
    ("AA", 0.30),
    ("B", 0.20),
    ("CCC", 0.13),
    ("D", 0.10),
    ("BB", 0.09),
    ("BBD", 0.08),
    ("C", 0.06),
    ("BDD", 0.04),
]


@pytest.fixture
def worked_pool() -> CandidatePool:
    return make_pool(WORKED_EXAMPLE)
