"""Candidate-pool construction: temperature shaping and top-k/top-p truncation.

The pool keeps its unnormalized post-temperature probabilities (their sum may
be < 1 after truncation); sampling code always consumes the normalized view
produced by :func:`normalize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .vocab import Token, Vocabulary


@dataclass(frozen=True)
class RawPrediction:
    """A provider's next-token distribution: parallel id/probability arrays."""

    ids: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.ids.shape != self.probs.shape or self.ids.ndim != 1:
            raise ParameterError("ids and probs must be parallel 1-d arrays")
        if len(self.ids) == 0:
            raise ParameterError("prediction must cover at least one token")

    def validate(self, vocab: Vocabulary, full_support: bool = False) -> None:
        """Check the invariants a well-formed prediction must satisfy."""
        if len(np.unique(self.ids)) != len(self.ids):
            raise ParameterError("prediction contains duplicate token ids")
        for token_id in self.ids.tolist():
            if token_id not in vocab:
                raise ParameterError(f"prediction references unknown token id {token_id}")
        if np.any(self.probs < 0.0):
            raise ParameterError("prediction contains a negative probability")
        total = math.fsum(self.probs.tolist())
        if total > 1.0 + 1e-9:
            raise ParameterError(f"prediction probabilities sum to {total} > 1")
        if full_support and abs(total - 1.0) > 1e-9:
            raise ParameterError(f"full-support prediction must sum to 1, got {total}")

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.probs.tolist()))


@dataclass(frozen=True)
class TruncationConfig:
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ParameterError(f"temperature must be positive, got {self.temperature}")
        if self.top_k is not None and self.top_k < 1:
            raise ParameterError(f"top_k must be >= 1, got {self.top_k}")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise ParameterError(f"top_p must be in (0, 1], got {self.top_p}")


@dataclass(frozen=True)
class CandidatePool:
    """Tokens surviving truncation, ordered by descending probability."""

    tokens: list[Token]
    probs: list[float]
    normalized: bool = False

    def __post_init__(self):
        if len(self.tokens) != len(self.probs):
            raise ParameterError("tokens and probs must have equal length")
        if len(self.tokens) == 0:
            raise ParameterError("candidate pool must be nonempty")


def apply_temperature(pred: RawPrediction, temperature: float) -> RawPrediction:
    """Reshape probabilities as p**(1/T), renormalized over the support."""
    if temperature <= 0.0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    if temperature == 1.0:
        return pred
    shaped = np.power(pred.probs, 1.0 / temperature)
    total = math.fsum(shaped.tolist())
    return RawPrediction(pred.ids, shaped / total)


def truncate(pred: RawPrediction, cfg: TruncationConfig, vocab: Vocabulary) -> CandidatePool:
    """Build the candidate pool: temperature, then top-k, then top-p.

    Sorting is by descending probability with ties broken by ascending token
    id, so both communicating parties derive identical pools from identical
    provider output.
    """
    shaped = apply_temperature(pred, cfg.temperature)
    order = np.lexsort((shaped.ids, -shaped.probs))
    ids = shaped.ids[order]
    probs = shaped.probs[order]
    if cfg.top_k is not None:
        ids = ids[: cfg.top_k]
        probs = probs[: cfg.top_k]
    if cfg.top_p is not None:
        cum = np.cumsum(probs)
        cut = int(np.searchsorted(cum, cfg.top_p, side="left")) + 1
        ids = ids[:cut]
        probs = probs[:cut]
    tokens = [vocab.by_id(i) for i in ids.tolist()]
    return CandidatePool(tokens, probs.tolist(), normalized=False)


def normalize(pool: CandidatePool) -> CandidatePool:
    """Scale probabilities to sum to one; token order unchanged."""
    total = math.fsum(pool.probs)
    if total <= 0.0:
        raise ParameterError("cannot normalize a zero-mass pool")
    return CandidatePool(pool.tokens, [p / total for p in pool.probs], normalized=True)
