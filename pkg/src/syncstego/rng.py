"""Keyed deterministic random streams and interval sampling.

Sender and receiver derive identical streams from a shared 32-byte key, so
every random draw made while embedding can be replayed bit-for-bit during
extraction. Streams are domain-separated by label; drawing from one never
advances another.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_right
from typing import Sequence

from .errors import ParameterError

KEY_LEN = 32

# Unit values keep the top 53 bits of each 64-bit block: dividing the raw
# block by 2**64 could round up to exactly 1.0 and break the [0, 1) contract.
_UNIT_BITS = 53
_UNIT_SCALE = 2.0 ** -53


class Key:
    """A 32-byte shared secret seeding every stream of a session."""

    __slots__ = ("data",)

    def __init__(self, data: bytes):
        if len(data) != KEY_LEN:
            raise ParameterError(f"key must be exactly {KEY_LEN} bytes, got {len(data)}")
        self.data = bytes(data)

    @classmethod
    def from_hex(cls, text: str) -> "Key":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise ParameterError(f"invalid key hex: {exc}") from exc

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Key) and self.data == other.data

    def __hash__(self) -> int:
        return hash(self.data)

    def __repr__(self) -> str:  # never echo the secret
        return "Key(<32 bytes>)"


class RandomStream:
    """Deterministic stream of 64-bit blocks.

    block(i) = SHA-256(stream_key || be64(i))[:8] with
    stream_key = SHA-256(key || label). The counter advances by one per
    draw, so identical (key, label) replays the identical sequence forever.
    """

    __slots__ = ("label", "counter", "_stream_key")

    def __init__(self, key: Key, label: bytes):
        if not label:
            raise ParameterError("stream label must be nonempty")
        self.label = bytes(label)
        self.counter = 0
        self._stream_key = hashlib.sha256(key.data + self.label).digest()

    def next_block(self) -> int:
        """Next raw 64-bit value."""
        digest = hashlib.sha256(self._stream_key + self.counter.to_bytes(8, "big")).digest()
        self.counter += 1
        return int.from_bytes(digest[:8], "big")

    def next_unit(self) -> float:
        """Next uniform value in [0, 1)."""
        return (self.next_block() >> (64 - _UNIT_BITS)) * _UNIT_SCALE

    def next_bits(self, n: int) -> str:
        """Top ``n`` bits of the next block, MSB first (0 < n <= 64)."""
        if not 0 < n <= 64:
            raise ParameterError(f"can draw 1..64 bits per block, asked for {n}")
        return format(self.next_block() >> (64 - n), f"0{n}b")


def derive_stream(key: Key, label: bytes | str) -> RandomStream:
    """Derive the deterministic stream for (key, label)."""
    if isinstance(label, str):
        label = label.encode("utf-8")
    return RandomStream(key, label)


def cumulative(probs: Sequence[float]) -> list[float]:
    """Left-to-right running sums.

    Every interval lookup in the package goes through this single code path,
    so sender and receiver agree on boundaries down to the last ulp.
    """
    total = 0.0
    out = []
    for p in probs:
        total += p
        out.append(total)
    return out


def locate(cum: Sequence[float], r: float) -> int:
    """Index of the left-closed right-open interval of ``cum`` containing ``r``.

    A value exactly on a boundary belongs to the interval on its right;
    accumulated rounding that leaves r at or beyond the final sum falls back
    to the last interval.
    """
    i = bisect_right(cum, r)
    return i if i < len(cum) else len(cum) - 1


def sync_sample(probs: Sequence[float], r: float) -> int:
    """Sample an index from a normalized distribution by interval lookup."""
    if len(probs) == 0:
        raise ParameterError("cannot sample from an empty distribution")
    cum = cumulative(probs)
    if abs(cum[-1] - 1.0) > 1e-9:
        raise ParameterError(f"probabilities must sum to 1, got {cum[-1]!r}")
    return locate(cum, r)
