"""Distribution-copies stego codec.

A step with shared pointer r can carry b bits when the 2**b rotated copies
(r + i/2**b) mod 1 all land in distinct CDF intervals: the sender picks the
copy indexed by the next b message bits, the receiver recovers i from the
observed interval. Whether copies collide depends only on (probs, r) -- both
already shared -- never on message content, which is what makes decoding
possible. Each copy is marginally uniform on [0, 1), so for uniform message
bits the chosen interval is distributed exactly per probs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DesynchronizationError, ParameterError
from .rng import cumulative, locate


@dataclass(frozen=True)
class EncodeStepResult:
    chosen_index: int
    bits_embedded: int


def bytes_to_bits(data: bytes) -> str:
    """MSB-first bit expansion of each byte."""
    return "".join(format(b, "08b") for b in data)


def bits_to_bytes(bits: str) -> bytes:
    if len(bits) % 8:
        raise ParameterError(f"bit string length {len(bits)} is not a multiple of 8")
    return bytes(int(bits[i : i + 8], 2) for i in range(0, len(bits), 8))


def _pointers(r: float, b: int) -> np.ndarray:
    copies = 1 << b
    pts = r + np.arange(copies) * (1.0 / copies)
    return np.where(pts >= 1.0, pts - 1.0, pts)


def _locate_many(cum: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # Identical boundary semantics to rng.locate: right-open intervals,
    # overflow past the final sum clamps to the last index.
    idx = np.searchsorted(cum, pts, side="right")
    return np.minimum(idx, len(cum) - 1)


def _capacity(cum_list: list[float], cum_arr: np.ndarray, r: float) -> int:
    # Distinctness at b+1 implies distinctness at b (the level-b copies are
    # the even-indexed level-(b+1) copies), so the first failure is final.
    n = len(cum_list)
    b = 0
    while (1 << (b + 1)) <= n:
        idx = _locate_many(cum_arr, _pointers(r, b + 1))
        if len(np.unique(idx)) != len(idx):
            break
        b += 1
    return b


def capacity_bits(probs: Sequence[float], r: float) -> int:
    """Largest b >= 1 with all 2**b copies in distinct intervals, else 0."""
    cum = cumulative(probs)
    return _capacity(cum, np.asarray(cum), r)


def encode_step(
    probs: Sequence[float],
    r: float,
    message: str,
    pad: Callable[[int], str] | None = None,
) -> EncodeStepResult:
    """Embed up to capacity_bits(probs, r) message bits into one index choice.

    ``pad`` supplies deficit bits when the message is shorter than the step's
    capacity; without it a short message is a parameter error.
    """
    cum = cumulative(probs)
    b = _capacity(cum, np.asarray(cum), r)
    if b == 0:
        return EncodeStepResult(locate(cum, r), 0)
    if len(message) < b:
        if pad is None:
            raise ParameterError(f"step capacity is {b} bits but only {len(message)} supplied")
        message = message + pad(b - len(message))
    i = int(message[:b], 2)
    p = r + i * (1.0 / (1 << b))
    if p >= 1.0:
        p -= 1.0
    return EncodeStepResult(locate(cum, p), b)


def decode_step(probs: Sequence[float], r: float, observed_index: int) -> str:
    """Recover the bits that made the sender choose ``observed_index``."""
    if not 0 <= observed_index < len(probs):
        raise ParameterError(f"observed index {observed_index} out of range")
    cum = cumulative(probs)
    b = _capacity(cum, np.asarray(cum), r)
    if b == 0:
        return ""
    idx = _locate_many(np.asarray(cum), _pointers(r, b))
    hits = np.flatnonzero(idx == observed_index)
    if len(hits) == 0:
        raise DesynchronizationError(
            f"no distribution copy reaches interval {observed_index}: "
            "stegotext corrupted or session state mismatched"
        )
    return format(int(hits[0]), f"0{b}b")
