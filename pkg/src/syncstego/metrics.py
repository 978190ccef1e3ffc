"""Security and efficiency measurements.

All logarithms are base 2: perplexity is defined with log2 and KL divergence
is reported in bits for consistency.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distribution import TruncationConfig, normalize, truncate
from .errors import ParameterError
from .rng import Key, derive_stream, sync_sample
from .vocab import is_prefix


def entropy_bits(probs: Sequence[float]) -> float:
    """Shannon entropy in bits; zero-probability entries contribute nothing."""
    p = np.asarray(probs, dtype=np.float64)
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """D(p || q) in bits. Terms with p_i = 0 contribute 0."""
    if len(p) != len(q):
        raise ParameterError(f"length mismatch: {len(p)} vs {len(q)}")
    pa = np.asarray(p, dtype=np.float64)
    qa = np.asarray(q, dtype=np.float64)
    mask = pa > 0.0
    if np.any(qa[mask] <= 0.0):
        raise ParameterError("q must be positive wherever p is")
    return float((pa[mask] * np.log2(pa[mask] / qa[mask])).sum())


def step_klds(records: Iterable) -> tuple[float, float]:
    """(average, maximum) per-step KL divergence across a record corpus."""
    klds = [rec.kld_bits for rec in records]
    if not klds:
        raise ParameterError("no records to aggregate")
    return sum(klds) / len(klds), max(klds)


def avg_perplexity(prob_seqs: Sequence[Sequence[float]]) -> float:
    """Mean over texts of 2**(-mean log2 step probability)."""
    if not prob_seqs:
        raise ParameterError("no texts to aggregate")
    ppls = []
    for probs in prob_seqs:
        if not probs:
            raise ParameterError("empty probability sequence")
        if any(not 0.0 < p <= 1.0 for p in probs):
            raise ParameterError("step probabilities must be in (0, 1]")
        ppls.append(2.0 ** (-math.fsum(math.log2(p) for p in probs) / len(probs)))
    return sum(ppls) / len(ppls)


def utilization(records: Iterable) -> float:
    """Embedded bits over total entropy seen by the codec; 0 if no entropy."""
    bits = 0
    entropy = 0.0
    for rec in records:
        bits += rec.bits_embedded
        entropy += rec.entropy_bits
    if not bits and entropy == 0.0:
        return 0.0
    if entropy == 0.0:
        return 0.0
    return bits / entropy


def total_error(sent: str, received: str) -> float:
    """Percent of sent bits that were wrong or missing on the receiving side."""
    if not sent:
        return 0.0
    mismatched = sum(1 for a, b in zip(sent, received) if a != b)
    missing = max(0, len(sent) - len(received))
    return 100.0 * (mismatched + missing) / len(sent)


def ambiguity_frequency(
    provider,
    truncation: TruncationConfig,
    n_samples: int,
    steps_per_sample: int,
    seed: int,
    context: Sequence[int] = (),
) -> float:
    """Fraction of plainly sampled tokens that prefix-relate to another candidate.

    Runs ordinary random sampling (no steganography): the likelihood that a
    normal generation step lands on a token carrying segmentation-ambiguity
    risk.
    """
    if n_samples < 1 or steps_per_sample < 1:
        raise ParameterError("need at least one sample and one step")
    stream = derive_stream(
        Key(hashlib.sha256(b"ambiguity-frequency" + seed.to_bytes(8, "big")).digest()),
        "plain",
    )
    ambiguous = 0
    total = 0
    for _ in range(n_samples):
        ctx = list(context)
        for _ in range(steps_per_sample):
            pool = normalize(truncate(provider.predict(ctx), truncation, provider.vocab))
            chosen = pool.tokens[sync_sample(pool.probs, stream.next_unit())]
            for other in pool.tokens:
                if other.id == chosen.id:
                    continue
                if is_prefix(other.subword, chosen.subword) or is_prefix(chosen.subword, other.subword):
                    ambiguous += 1
                    break
            total += 1
            ctx.append(chosen.id)
    return ambiguous / total


@dataclass
class EvalReport:
    mode: str
    k: int | None
    n_sessions: int
    ave_ppl: float
    ave_kld: float
    max_kld: float
    capacity_bits_per_token: float
    utilization: float
    utilization_zero_entropy: bool
    total_error_pct: float
    ambiguity_frequency: float
    total_time_s: float
    ave_time_per_bit_s: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "n_sessions": self.n_sessions,
            "ave_ppl": self.ave_ppl,
            "ave_kld": self.ave_kld,
            "max_kld": self.max_kld,
            "capacity_bits_per_token": self.capacity_bits_per_token,
            "utilization": self.utilization,
            "utilization_zero_entropy": self.utilization_zero_entropy,
            "total_error_pct": self.total_error_pct,
            "ambiguity_frequency": self.ambiguity_frequency,
            "total_time_s": self.total_time_s,
            "ave_time_per_bit_s": self.ave_time_per_bit_s,
        }


_TABLE_COLUMNS = [
    ("Mode", "mode", "s"),
    ("k", "k", "d"),
    ("Ave PPL", "ave_ppl", ".2f"),
    ("Ave KLD", "ave_kld", ".3g"),
    ("Max KLD", "max_kld", ".3g"),
    ("Capacity", "capacity_bits_per_token", ".2f"),
    ("Utilization", "utilization", ".2f"),
    ("Total Time", "total_time_s", ".3f"),
    ("Ave Time", "ave_time_per_bit_s", ".2e"),
    ("Total Error", "total_error_pct", ".2f"),
]


def format_report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned-column text table, one row per (mode, k)."""
    rows = [[title for title, _, _ in _TABLE_COLUMNS]]
    for rep in reports:
        row = []
        for _, attr, fmt in _TABLE_COLUMNS:
            value = getattr(rep, attr)
            row.append("-" if value is None else format(value, fmt))
        rows.append(row)
    widths = [max(len(row[i]) for row in rows) for i in range(len(_TABLE_COLUMNS))]
    lines = ["  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
