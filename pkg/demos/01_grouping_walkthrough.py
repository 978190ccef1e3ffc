"""Walk through ambiguity-pool grouping on the classic top-8 candidate pool.

The pool mixes tokens with and without prefix relationships. Sorting by raw
subword bytes puts every prefix chain next to its extensions; one linear scan
then merges each chain into a pool whose first (shortest) member is the
representative. Token probabilities ride along untouched, which is the whole
point: grouping redistributes nothing.
"""

from syncstego import CandidatePool, Token, group_ambiguity, normalize_within

entries = [
    ("AA", 0.30),
    ("B", 0.20),
    ("CCC", 0.13),
    ("D", 0.10),
    ("BB", 0.09),
    ("BBD", 0.08),
    ("C", 0.06),
    ("BDD", 0.04),
]
pool = CandidatePool(
    [Token(i, s.encode()) for i, (s, _) in enumerate(entries)],
    [p for _, p in entries],
    normalized=True,
)

print("candidate pool (probability order):")
for token, prob in zip(pool.tokens, pool.probs):
    print(f"  {token.subword.decode():4s} {prob:.2f}")

grouped = group_ambiguity(pool)
print(f"\ngrouped into {len(grouped.pools)} ambiguity pools:")
for apool in grouped.pools:
    members = ", ".join(m.subword.decode() for m in apool.members)
    print(f"  [{members}]  mass={apool.pool_prob:.2f}  representative={apool.representative.subword.decode()}")

b_pool = grouped.pools[1]
print("\ninside the B pool, members renormalize for synchronized sampling:")
for member, share in zip(b_pool.members, normalize_within(b_pool)):
    print(f"  {member.subword.decode():4s} share={share:.4f}")

print(
    "\nnote: BB and BDD share no prefix relation with each other, only with B -"
    " pools close over the representative's chain, not pairwise."
)
