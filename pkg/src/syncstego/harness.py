"""Multi-session evaluation harness backing `syncstego eval` and the tests.

Per-session keys and messages are derived deterministically from one harness
seed, so a sweep is reproducible end to end. Timing excludes provider
latency: provider calls are wrapped with a timer and subtracted.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Sequence

from .distribution import TruncationConfig
from .errors import DesynchronizationError
from .metrics import (
    EvalReport,
    ambiguity_frequency,
    avg_perplexity,
    total_error,
    utilization,
)
from .pipeline import SYNCPOOL, StegoSession, StepRecord, embed, extract
from .rng import Key, derive_stream


class TimedProvider:
    """Delegating provider that accumulates time spent inside predict()."""

    def __init__(self, inner):
        self.inner = inner
        self.vocab = inner.vocab
        self.kind = inner.kind
        self.seconds = 0.0

    def predict(self, context):
        start = time.perf_counter()
        try:
            return self.inner.predict(context)
        finally:
            self.seconds += time.perf_counter() - start


@dataclass
class SessionResult:
    key: Key
    message: str
    error_pct: float
    desync_step: int | None
    padded_bits: int
    embed_records: list[StepRecord]
    stego_time_s: float


@dataclass
class SweepConfig:
    provider: object
    truncation: TruncationConfig
    mode: str = SYNCPOOL
    n_sessions: int = 100
    message_bits: int = 256
    seed: int = 0
    max_steps: int = 4096
    context: tuple[int, ...] = ()
    ambiguity_samples: tuple[int, int] = (20, 50)


def _session_inputs(seed: int, n_sessions: int, message_bits: int) -> list[tuple[Key, str]]:
    stream = derive_stream(
        Key(hashlib.sha256(b"harness" + seed.to_bytes(8, "big")).digest()), "sessions"
    )
    out = []
    for _ in range(n_sessions):
        key = Key(b"".join(stream.next_block().to_bytes(8, "big") for _ in range(4)))
        bits = "".join(stream.next_bits(64) for _ in range((message_bits + 63) // 64))
        out.append((key, bits[:message_bits]))
    return out


def run_sessions(cfg: SweepConfig) -> list[SessionResult]:
    results = []
    for key, message in _session_inputs(cfg.seed, cfg.n_sessions, cfg.message_bits):
        timed = TimedProvider(cfg.provider)
        session = StegoSession(
            key=key,
            provider=timed,
            truncation=cfg.truncation,
            context=cfg.context,
            max_steps=cfg.max_steps,
            disambiguation=cfg.mode,
        )
        start = time.perf_counter()
        out = embed(session, message)
        desync_step = None
        try:
            received = extract(session, out.stegotext).bits
        except DesynchronizationError as exc:
            received = exc.partial_bits
            desync_step = exc.step
        elapsed = time.perf_counter() - start
        results.append(
            SessionResult(
                key=key,
                message=message,
                error_pct=total_error(message, received),
                desync_step=desync_step,
                padded_bits=out.padded_bits,
                embed_records=out.records,
                stego_time_s=max(0.0, elapsed - timed.seconds),
            )
        )
    return results


def summarize(cfg: SweepConfig, results: Sequence[SessionResult], k_label: int | None) -> EvalReport:
    records = [rec for res in results for rec in res.embed_records]
    total_bits = sum(rec.bits_embedded for rec in records)
    total_tokens = len(records)
    total_entropy = sum(rec.entropy_bits for rec in records)
    klds = [rec.kld_bits for rec in records]
    sent_bits = sum(len(res.message) for res in results)
    wrong_bits = sum(res.error_pct * len(res.message) / 100.0 for res in results)
    total_time = sum(res.stego_time_s for res in results)
    n_amb, steps_amb = cfg.ambiguity_samples
    return EvalReport(
        mode=cfg.mode,
        k=k_label,
        n_sessions=len(results),
        ave_ppl=avg_perplexity([[rec.chosen_prob for rec in res.embed_records] for res in results]),
        ave_kld=sum(klds) / len(klds),
        max_kld=max(klds),
        capacity_bits_per_token=total_bits / total_tokens,
        utilization=utilization(records),
        utilization_zero_entropy=total_entropy == 0.0,
        total_error_pct=100.0 * wrong_bits / sent_bits if sent_bits else 0.0,
        ambiguity_frequency=ambiguity_frequency(
            cfg.provider, cfg.truncation, n_amb, steps_amb, cfg.seed, cfg.context
        ),
        total_time_s=total_time,
        ave_time_per_bit_s=total_time / total_bits if total_bits else 0.0,
    )


def run_sweep(cfg: SweepConfig, k_label: int | None = None) -> tuple[EvalReport, list[SessionResult]]:
    results = run_sessions(cfg)
    return summarize(cfg, results, k_label), results
