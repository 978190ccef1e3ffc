"""Token and vocabulary handling: loading, prefix predicates, detokenization.

Subwords are opaque byte strings (UTF-8 encodings of the file's string
entries); any word-boundary marker is part of the subword. All prefix logic
is byte-level, which keeps detokenize/match behaviour consistent for
multi-byte scripts.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ParameterError, VocabularyFormatError, VocabularyValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .distribution import CandidatePool


@dataclass(frozen=True)
class Token:
    id: int
    subword: bytes

    def __post_init__(self):
        if self.id < 0:
            raise VocabularyValidationError(f"token id must be non-negative, got {self.id}")
        if len(self.subword) < 1:
            raise VocabularyValidationError(f"token {self.id} has an empty subword")


class Vocabulary:
    """Immutable ordered token universe; safe to share across sessions."""

    def __init__(self, tokens: Iterable[Token], source_sha256: str | None = None):
        self.tokens: tuple[Token, ...] = tuple(tokens)
        if len(self.tokens) < 2:
            raise VocabularyValidationError("vocabulary needs at least 2 tokens")
        self._by_id: dict[int, Token] = {}
        seen_subwords: set[bytes] = set()
        for tok in self.tokens:
            if tok.id in self._by_id:
                raise VocabularyValidationError(f"duplicate token id {tok.id}")
            if tok.subword in seen_subwords:
                raise VocabularyValidationError(f"duplicate subword {tok.subword!r}")
            self._by_id[tok.id] = tok
            seen_subwords.add(tok.subword)
        self.source_sha256 = source_sha256

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self._by_id

    def by_id(self, token_id: int) -> Token:
        try:
            return self._by_id[token_id]
        except KeyError:
            raise ParameterError(f"unknown token id {token_id}") from None


def load_vocabulary(data: bytes) -> Vocabulary:
    """Parse the canonical vocabulary file format.

    The format is a UTF-8 JSON array of ``{"id": <int>, "subword": "<str>"}``
    objects; array order defines the canonical token order.
    """
    try:
        entries = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise VocabularyFormatError(f"vocabulary file is not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise VocabularyFormatError(
            f"vocabulary file is not valid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(entries, list):
        raise VocabularyFormatError("vocabulary file must be a JSON array")
    tokens = []
    for offset, entry in enumerate(entries):
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("id"), int)
            or isinstance(entry.get("id"), bool)
            or not isinstance(entry.get("subword"), str)
        ):
            raise VocabularyFormatError(
                f'entry {offset} must be {{"id": <int>, "subword": "<str>"}}, got {entry!r}'
            )
        if entry["subword"] == "":
            # An empty subword would match every remaining text and make
            # prefix matching nonterminating.
            raise VocabularyValidationError(f"entry {offset}: empty subword")
        tokens.append(Token(entry["id"], entry["subword"].encode("utf-8")))
    return Vocabulary(tokens, source_sha256=hashlib.sha256(data).hexdigest())


def load_vocabulary_file(path) -> Vocabulary:
    with open(path, "rb") as fh:
        return load_vocabulary(fh.read())


def dump_vocabulary(vocab: Vocabulary) -> bytes:
    """Serialize to the canonical file format (one entry per line)."""
    lines = ",\n".join(
        json.dumps({"id": t.id, "subword": t.subword.decode("utf-8")}, ensure_ascii=False, separators=(",", ":"))
        for t in vocab.tokens
    )
    return ("[\n" + lines + "\n]\n").encode("utf-8")


def vocabulary_sha256(vocab: Vocabulary) -> str:
    """Hash of the vocabulary as exchanged at provider handshake."""
    if vocab.source_sha256 is not None:
        return vocab.source_sha256
    return hashlib.sha256(dump_vocabulary(vocab)).hexdigest()


def is_prefix(a: bytes, b: bytes) -> bool:
    """True iff ``a`` equals the first len(a) bytes of ``b`` (reflexive)."""
    return b.startswith(a)


def detokenize(tokens: Sequence[Token]) -> bytes:
    """Concatenate subwords in order; the emitted text of a token sequence."""
    return b"".join(t.subword for t in tokens)


def prefix_matches(pool: "CandidatePool", remaining: bytes) -> list[Token]:
    """Pool tokens whose subword is a byte-prefix of ``remaining``, in pool order.

    May be empty; the caller treats an empty result as desynchronization.
    """
    if not remaining:
        raise ParameterError("remaining text must be nonempty")
    return [t for t in pool.tokens if remaining.startswith(t.subword)]


_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def generate_vocabulary(size: int, prefix_richness: float, seed: int) -> Vocabulary:
    """Deterministic synthetic vocabulary for tests and harness fixtures.

    Roughly ``prefix_richness`` of the tokens extend another token's subword
    (and therefore carry segmentation-ambiguity potential); the rest are
    fixed-width strings, prefix-free among themselves.
    """
    if size < 2:
        raise ParameterError(f"vocabulary size must be >= 2, got {size}")
    if not 0.0 <= prefix_richness <= 1.0:
        raise ParameterError(f"prefix richness must be in [0, 1], got {prefix_richness}")
    rng = random.Random(seed)
    n_base = max(1, round(size * (1.0 - prefix_richness)))
    n_base = min(n_base, size)
    width = 2
    while len(_ALPHABET) ** width < n_base:
        width += 1

    subwords: list[str] = []
    seen: set[str] = set()
    while len(subwords) < n_base:
        cand = "".join(rng.choice(_ALPHABET) for _ in range(width))
        if cand not in seen:
            seen.add(cand)
            subwords.append(cand)
    while len(subwords) < size:
        parent = rng.choice(subwords)
        cand = parent + "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(1, 2)))
        if cand not in seen:
            seen.add(cand)
            subwords.append(cand)
    return Vocabulary(Token(i, s.encode("utf-8")) for i, s in enumerate(subwords))
