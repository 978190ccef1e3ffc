"""Full embedding and extraction loops.

Each step runs predict -> truncate+normalize -> group -> codec; the sender
then emits either the chosen group's single token or a synchronized draw from
its members, and the receiver replays the identical sequence of decisions
from the shared key, provider and stegotext. The receiver never retokenizes
with an off-the-shelf tokenizer: it matches candidate subwords against the
remaining stegotext bytes directly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ambiguity import GroupedDistribution, group_ambiguity, normalize_within, pool_of
from .codec import decode_step, encode_step
from .distribution import CandidatePool, TruncationConfig, normalize, truncate
from .errors import CapacityExhaustedError, DesynchronizationError, ParameterError
from .metrics import entropy_bits, kl_divergence, total_error
from .rng import Key, derive_stream, sync_sample
from .vocab import Token, detokenize, prefix_matches

SYNCPOOL = "syncpool"
BASELINE = "none"


@dataclass(frozen=True)
class StegoSession:
    """Everything sender and receiver must share for one covert exchange."""

    key: Key
    provider: object
    truncation: TruncationConfig
    context: tuple[int, ...] = ()
    max_steps: int = 1024
    disambiguation: str = SYNCPOOL

    def __post_init__(self):
        if self.disambiguation not in (SYNCPOOL, BASELINE):
            raise ParameterError(f"unknown disambiguation mode {self.disambiguation!r}")
        if self.max_steps < 1:
            raise ParameterError(f"max_steps must be >= 1, got {self.max_steps}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    pool_size: int
    grouped_size: int
    ambiguous: bool
    bits_embedded: int
    chosen_id: int
    chosen_prob: float
    entropy_bits: float
    kld_bits: float

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "pool_size": self.pool_size,
            "grouped_size": self.grouped_size,
            "ambiguous": self.ambiguous,
            "bits_embedded": self.bits_embedded,
            "chosen_id": self.chosen_id,
            "chosen_prob": self.chosen_prob,
            "entropy_bits": self.entropy_bits,
            "kld_bits": self.kld_bits,
        }


@dataclass
class EmbedOutput:
    token_ids: list[int]
    stegotext: bytes
    records: list[StepRecord]
    padded_bits: int


@dataclass
class ExtractOutput:
    bits: str
    token_ids: list[int]
    records: list[StepRecord]


@dataclass
class BaselineReport:
    sent_bits: str
    received_bits: str
    error_pct: float
    desync_step: int | None


def _check_bits(bits: str) -> None:
    if bits.strip("01"):
        raise ParameterError("message must contain only '0' and '1'")


def _prepare_step(session: StegoSession, context: list[int]):
    pred = session.provider.predict(context)
    pool = normalize(truncate(pred, session.truncation, session.provider.vocab))
    if session.disambiguation == SYNCPOOL:
        grouped = group_ambiguity(pool)
        return pool, grouped, list(grouped.pool_probs)
    return pool, None, pool.probs


def _sampling_kld(pool: CandidatePool, grouped: GroupedDistribution | None) -> float:
    # The token-level distribution the two-stage sampler actually induces,
    # reconstructed with the same float operations the sampler uses.
    if grouped is None:
        return kl_divergence(pool.probs, pool.probs)
    induced = {}
    for apool in grouped.pools:
        shares = normalize_within(apool)
        for member, share in zip(apool.members, shares):
            induced[member.id] = apool.pool_prob * share
    return kl_divergence(pool.probs, [induced[t.id] for t in pool.tokens])


def _pick_member(apool, sync_stream) -> tuple[Token, float, bool]:
    if len(apool.members) == 1:
        return apool.members[0], apool.member_probs[0], False
    shares = normalize_within(apool)
    chosen = sync_sample(shares, sync_stream.next_unit())
    return apool.members[chosen], apool.member_probs[chosen], True


def embed(session: StegoSession, message: str) -> EmbedOutput:
    """Generate stego tokens carrying ``message`` (a '01' string).

    One steg draw is consumed on every step and one sync draw only on
    ambiguous steps, mirroring extraction exactly. When the final step's
    capacity exceeds the remaining message, the deficit is filled from the
    "pad" stream and reported as ``padded_bits``.
    """
    if not message:
        raise ParameterError("message must be nonempty")
    _check_bits(message)
    steg = derive_stream(session.key, "steg")
    sync = derive_stream(session.key, "sync")
    pad = derive_stream(session.key, "pad")

    context = list(session.context)
    tokens: list[Token] = []
    records: list[StepRecord] = []
    consumed = 0
    padded = 0
    step = 0
    while consumed < len(message):
        step += 1
        if step > session.max_steps:
            raise CapacityExhaustedError(
                f"only {consumed}/{len(message)} bits embedded after "
                f"{session.max_steps} steps; stegotext too short for this message"
            )
        pool, grouped, code_probs = _prepare_step(session, context)
        r_steg = steg.next_unit()
        result = encode_step(code_probs, r_steg, message[consumed:], pad=pad.next_bits)
        if grouped is not None:
            token, token_prob, ambiguous = _pick_member(grouped.pools[result.chosen_index], sync)
        else:
            token = pool.tokens[result.chosen_index]
            token_prob = pool.probs[result.chosen_index]
            ambiguous = False
        used = min(result.bits_embedded, len(message) - consumed)
        consumed += used
        padded += result.bits_embedded - used
        records.append(
            StepRecord(
                step=step,
                pool_size=len(pool.tokens),
                grouped_size=len(grouped.pools) if grouped is not None else len(pool.tokens),
                ambiguous=ambiguous,
                bits_embedded=result.bits_embedded,
                chosen_id=token.id,
                chosen_prob=token_prob,
                entropy_bits=entropy_bits(code_probs),
                kld_bits=_sampling_kld(pool, grouped),
            )
        )
        tokens.append(token)
        context.append(token.id)
    return EmbedOutput(
        token_ids=[t.id for t in tokens],
        stegotext=detokenize(tokens),
        records=records,
        padded_bits=padded,
    )


def extract(session: StegoSession, stegotext: bytes) -> ExtractOutput:
    """Recover the embedded bits (message plus any padding) from stegotext.

    With syncpool disambiguation this inverts :func:`embed` exactly. With
    disambiguation "none" it plays the ambiguity-unaware receiver: greedy
    longest prefix match against the candidate pool, the natural off-the-shelf
    tokenizer behaviour, which can silently diverge on prefix-rich
    vocabularies.
    """
    if not stegotext:
        raise ParameterError("stegotext must be nonempty")
    steg = derive_stream(session.key, "steg")
    sync = derive_stream(session.key, "sync")

    context = list(session.context)
    tokens: list[Token] = []
    records: list[StepRecord] = []
    parts: list[str] = []
    remaining = bytes(stegotext)
    step = 0
    while remaining:
        step += 1
        partial = "".join(parts)
        if step > session.max_steps:
            raise DesynchronizationError(
                f"step {step}: stegotext not consumed within max_steps",
                step=step,
                partial_bits=partial,
            )
        pool, grouped, code_probs = _prepare_step(session, context)
        matches = prefix_matches(pool, remaining)
        if not matches:
            raise DesynchronizationError(
                f"step {step}: no candidate token prefixes the remaining stegotext",
                step=step,
                partial_bits=partial,
            )
        r_steg = steg.next_unit()
        if grouped is not None:
            # Any match resolves to the same pool: byte-prefixes of one string
            # are mutually prefix-related, and grouping is prefix-closed.
            pool_index, apool = pool_of(grouped, matches[0])
            try:
                bits = decode_step(code_probs, r_steg, pool_index)
            except DesynchronizationError as exc:
                raise DesynchronizationError(
                    f"step {step}: {exc}", step=step, partial_bits=partial
                ) from exc
            token, token_prob, ambiguous = _pick_member(apool, sync)
            if not remaining.startswith(token.subword):
                raise DesynchronizationError(
                    f"step {step}: synchronized token {token.subword!r} does not "
                    "prefix the remaining stegotext",
                    step=step,
                    partial_bits=partial,
                )
        else:
            token = max(matches, key=lambda t: len(t.subword))
            positions = {t.id: i for i, t in enumerate(pool.tokens)}
            try:
                bits = decode_step(code_probs, r_steg, positions[token.id])
            except DesynchronizationError as exc:
                raise DesynchronizationError(
                    f"step {step}: {exc}", step=step, partial_bits=partial
                ) from exc
            token_prob = pool.probs[positions[token.id]]
            ambiguous = False
        parts.append(bits)
        records.append(
            StepRecord(
                step=step,
                pool_size=len(pool.tokens),
                grouped_size=len(grouped.pools) if grouped is not None else len(pool.tokens),
                ambiguous=ambiguous,
                bits_embedded=len(bits),
                chosen_id=token.id,
                chosen_prob=token_prob,
                entropy_bits=entropy_bits(code_probs),
                kld_bits=_sampling_kld(pool, grouped),
            )
        )
        tokens.append(token)
        context.append(token.id)
        remaining = remaining[len(token.subword) :]
    return ExtractOutput(bits="".join(parts), token_ids=[t.id for t in tokens], records=records)


def run_baseline_roundtrip(session: StegoSession, message: str) -> BaselineReport:
    """Embed and extract with the ambiguity-unaware receiver; errors are the measurement."""
    if session.disambiguation != BASELINE:
        raise ParameterError("baseline roundtrip needs a session with disambiguation 'none'")
    out = embed(session, message)
    desync_step = None
    try:
        received = extract(session, out.stegotext).bits
    except DesynchronizationError as exc:
        received = exc.partial_bits
        desync_step = exc.step
    return BaselineReport(
        sent_bits=message,
        received_bits=received,
        error_pct=total_error(message, received),
        desync_step=desync_step,
    )
