"""Next-token distribution providers.

Two kinds share one contract -- identical context always yields a
bit-identical prediction:

* a hash-based synthetic model (zero dependencies, tunable entropy), and
* a client for external model processes speaking the line-delimited JSON
  wire protocol over stdio or TCP.
"""

from __future__ import annotations

import hashlib
import json
import math
import select
import socket
import subprocess
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .distribution import RawPrediction
from .errors import ParameterError, ProviderError
from .vocab import Vocabulary, vocabulary_sha256

PROTOCOL_VERSION = 1


class ProviderHandle(Protocol):  # pragma: no cover - structural type only
    kind: str
    vocab: Vocabulary

    def predict(self, context: Sequence[int]) -> RawPrediction: ...


@dataclass(frozen=True)
class SyntheticModelSpec:
    vocab: Vocabulary
    seed: int
    order: int = 3
    concentration: float = 2.0

    def __post_init__(self):
        if self.order < 0:
            raise ParameterError(f"order must be >= 0, got {self.order}")
        if self.concentration <= 0.0:
            raise ParameterError(f"concentration must be positive, got {self.concentration}")


def _pow2_exponent(value: float) -> int | None:
    mantissa, exponent = math.frexp(value)
    if mantissa == 0.5 and exponent >= 1:
        return exponent - 1
    return None


class SyntheticProvider:
    """Deterministic hash-backed model.

    Per-token weights come from expanding SHA-256(seed || context window)
    through SHAKE-256; concentration reshapes them as w**(1/c) before
    normalization. Powers-of-two concentrations use repeated square roots,
    which are correctly rounded by IEEE-754 and therefore bit-identical on
    every platform.
    """

    kind = "synthetic"

    def __init__(self, spec: SyntheticModelSpec):
        self.spec = spec
        self.vocab = spec.vocab
        self._ids = np.array([t.id for t in spec.vocab.tokens], dtype=np.int64)
        self._seed8 = spec.seed.to_bytes(8, "big")
        self._sqrt_steps = _pow2_exponent(spec.concentration)

    def predict(self, context: Sequence[int]) -> RawPrediction:
        window = tuple(context[-self.spec.order :]) if self.spec.order > 0 else ()
        for token_id in window:
            if token_id not in self.vocab:
                raise ParameterError(f"context contains unknown token id {token_id}")
        h = hashlib.sha256(
            self._seed8 + b"".join(int(t).to_bytes(8, "big") for t in window)
        ).digest()
        raw = hashlib.shake_256(h).digest(8 * len(self._ids))
        u = np.frombuffer(raw, dtype=">u8").astype(np.uint64)
        # ((u >> 11) + 1) / 2**53 is an exact dyadic in (0, 1]: no rounding,
        # so the whole prediction is reproducible bit-for-bit anywhere.
        w = ((u >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        if self._sqrt_steps is None:
            w = np.power(w, 1.0 / self.spec.concentration)
        else:
            for _ in range(self._sqrt_steps):
                w = np.sqrt(w)
        total = math.fsum(w.tolist())
        return RawPrediction(self._ids, w / total)


def make_synthetic(spec: SyntheticModelSpec) -> SyntheticProvider:
    return SyntheticProvider(spec)


class _LineChannel(Protocol):  # pragma: no cover - structural type only
    def send_line(self, line: bytes) -> None: ...

    def recv_line(self) -> bytes: ...

    def close(self) -> None: ...


class _StdioChannel:
    def __init__(self, argv: Sequence[str], timeout: float):
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise ProviderError(f"cannot spawn endpoint {argv!r}: {exc}") from exc

    def send_line(self, line: bytes) -> None:
        assert self.proc.stdin is not None
        self.proc.stdin.write(line + b"\n")
        self.proc.stdin.flush()

    def recv_line(self) -> bytes:
        assert self.proc.stdout is not None
        ready, _, _ = select.select([self.proc.stdout], [], [], self.timeout)
        if not ready:
            raise ProviderError(f"endpoint did not answer within {self.timeout}s")
        line = self.proc.stdout.readline()
        if not line:
            raise ProviderError("endpoint closed the stream")
        return line

    def close(self) -> None:
        if self.proc.stdin is not None:
            self.proc.stdin.close()
        self.proc.terminate()
        self.proc.wait(timeout=5)


class _TcpChannel:
    def __init__(self, host: str, port: int, timeout: float):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ProviderError(f"cannot connect to {host}:{port}: {exc}") from exc
        self.sock.settimeout(timeout)
        self._fh = self.sock.makefile("rwb")

    def send_line(self, line: bytes) -> None:
        self._fh.write(line + b"\n")
        self._fh.flush()

    def recv_line(self) -> bytes:
        try:
            line = self._fh.readline()
        except socket.timeout as exc:
            raise ProviderError(f"endpoint timed out: {exc}") from exc
        if not line:
            raise ProviderError("endpoint closed the connection")
        return line

    def close(self) -> None:
        self._fh.close()
        self.sock.close()


def _open_channel(endpoint: dict, timeout: float) -> _LineChannel:
    transport = endpoint.get("transport")
    if transport == "stdio":
        return _StdioChannel(endpoint["argv"], timeout)
    if transport == "tcp":
        return _TcpChannel(endpoint["host"], int(endpoint["port"]), timeout)
    raise ParameterError(f"unknown transport {transport!r}")


class ExternalProvider:
    """Client side of the provider wire protocol.

    One serial request/response channel, confined to a single session.
    """

    kind = "external"

    def __init__(self, channel: _LineChannel, vocab: Vocabulary, top_k_hint: int | None = None):
        self.vocab = vocab
        self.top_k_hint = top_k_hint
        self._channel = channel
        self._handshake()

    def _roundtrip(self, frame: dict) -> dict:
        try:
            self._channel.send_line(json.dumps(frame, separators=(",", ":")).encode("utf-8"))
            line = self._channel.recv_line()
        except OSError as exc:
            raise ProviderError(f"endpoint I/O failed: {exc}") from exc
        try:
            reply = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProviderError(f"malformed frame from endpoint: {exc}") from exc
        if not isinstance(reply, dict):
            raise ProviderError(f"malformed frame from endpoint: {reply!r}")
        if reply.get("type") == "error":
            raise ProviderError(f"endpoint error: {reply.get('message', '<no message>')}")
        return reply

    def _handshake(self) -> None:
        reply = self._roundtrip({"type": "hello", "protocol": PROTOCOL_VERSION})
        if reply.get("type") != "ready":
            raise ProviderError(f"expected ready frame, got {reply!r}")
        if reply.get("vocab_size") != len(self.vocab):
            raise ProviderError(
                f"vocabulary size mismatch: endpoint has {reply.get('vocab_size')}, "
                f"session has {len(self.vocab)}"
            )
        ours = vocabulary_sha256(self.vocab)
        if reply.get("vocab_sha256") != ours:
            raise ProviderError(
                f"vocabulary hash mismatch: endpoint {reply.get('vocab_sha256')}, session {ours}"
            )

    def predict(self, context: Sequence[int]) -> RawPrediction:
        for token_id in context:
            if token_id not in self.vocab:
                raise ParameterError(f"context contains unknown token id {token_id}")
        reply = self._roundtrip(
            {"type": "predict", "context": [int(t) for t in context], "top_k": self.top_k_hint}
        )
        if reply.get("type") != "dist" or not isinstance(reply.get("entries"), list):
            raise ProviderError(f"expected dist frame, got {reply!r}")
        ids: list[int] = []
        probs: list[float] = []
        for entry in reply["entries"]:
            if (
                not isinstance(entry, (list, tuple))
                or len(entry) != 2
                or not isinstance(entry[0], int)
                or not isinstance(entry[1], (int, float))
            ):
                raise ProviderError(f"malformed dist entry {entry!r}")
            ids.append(entry[0])
            probs.append(float(entry[1]))
        if not ids:
            raise ProviderError("endpoint returned an empty distribution")
        prev: tuple[float, int] | None = None
        for token_id, prob in zip(ids, probs):
            if token_id not in self.vocab:
                raise ProviderError(f"endpoint returned unknown token id {token_id}")
            if prob < 0.0:
                raise ProviderError(f"endpoint returned negative probability {prob}")
            if prev is not None and (-prob, token_id) < prev:
                raise ProviderError("dist entries not sorted by prob desc, id asc")
            prev = (-prob, token_id)
        if len(set(ids)) != len(ids):
            raise ProviderError("endpoint returned duplicate token ids")
        total = math.fsum(probs)
        if total > 1.0 + 1e-6:
            raise ProviderError(f"endpoint probabilities sum to {total} > 1")
        return RawPrediction(np.array(ids, dtype=np.int64), np.array(probs, dtype=np.float64))

    def close(self) -> None:
        self._channel.close()


def connect_external(
    endpoint: dict,
    vocab: Vocabulary,
    top_k_hint: int | None = None,
    timeout: float = 30.0,
) -> ExternalProvider:
    """Open a channel to an external model endpoint and perform the handshake.

    ``endpoint`` is ``{"transport": "stdio", "argv": [...]}`` or
    ``{"transport": "tcp", "host": ..., "port": ...}``.
    """
    return ExternalProvider(_open_channel(endpoint, timeout), vocab, top_k_hint)
