"""Grouping a candidate pool into ambiguity pools by prefix relationships.

Tokens are sorted by raw subword bytes (a total, locale-free order) and
scanned once: a token joins the open group while the group's representative
is a byte-prefix of it, otherwise it opens a new group. Every token keeps its
original probability, so grouping redistributes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distribution import CandidatePool
from .errors import ParameterError
from .vocab import Token, is_prefix


@dataclass(frozen=True)
class AmbiguityPool:
    """One group: a representative and every pool token it prefixes."""

    representative: Token
    members: tuple[Token, ...]
    member_probs: tuple[float, ...]
    pool_prob: float


@dataclass(frozen=True)
class GroupedDistribution:
    pools: tuple[AmbiguityPool, ...]
    pool_probs: tuple[float, ...]

    def __post_init__(self):
        index: dict[int, int] = {}
        for i, pool in enumerate(self.pools):
            for member in pool.members:
                index[member.id] = i
        object.__setattr__(self, "_index", index)


def group_ambiguity(pool: CandidatePool) -> GroupedDistribution:
    """Partition a candidate pool into ambiguity pools."""
    order = sorted(range(len(pool.tokens)), key=lambda i: pool.tokens[i].subword)
    pools: list[AmbiguityPool] = []
    rep: Token | None = None
    members: list[Token] = []
    probs: list[float] = []

    def close_group():
        pools.append(
            AmbiguityPool(
                representative=members[0],
                members=tuple(members),
                member_probs=tuple(probs),
                pool_prob=math.fsum(probs),
            )
        )

    for i in order:
        token = pool.tokens[i]
        if rep is not None and is_prefix(rep.subword, token.subword):
            members.append(token)
            probs.append(pool.probs[i])
        else:
            if rep is not None:
                close_group()
            rep = token
            members = [token]
            probs = [pool.probs[i]]
    close_group()
    return GroupedDistribution(tuple(pools), tuple(p.pool_prob for p in pools))


def pool_of(grouped: GroupedDistribution, token: Token) -> tuple[int, AmbiguityPool]:
    """The unique pool containing ``token`` and its index in grouped order."""
    try:
        i = grouped._index[token.id]
    except KeyError:
        raise LookupError(f"token id {token.id} is not in the grouped distribution") from None
    return i, grouped.pools[i]


def normalize_within(pool: AmbiguityPool) -> list[float]:
    """Member probabilities rescaled to sum to one, order preserved."""
    if pool.pool_prob <= 0.0:
        raise ParameterError("ambiguity pool has zero mass")
    return [p / pool.pool_prob for p in pool.member_probs]
