"""Session descriptor files: the shared protocol state on disk.

Both parties load the same descriptor; its SHA-256 is embedded in audit
output so mismatched sessions fail loudly instead of silently desyncing.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .distribution import TruncationConfig
from .errors import ParameterError
from .pipeline import StegoSession
from .provider import SyntheticModelSpec, connect_external, make_synthetic
from .rng import Key
from .vocab import load_vocabulary_file

SCHEMA = 1


@dataclass
class SessionFile:
    session: StegoSession
    sha256: str
    raw: dict


def _build_provider(spec: dict, base_dir: str):
    vocab_path = spec.get("vocab")
    if not isinstance(vocab_path, str):
        raise ParameterError("provider spec needs a 'vocab' file path")
    vocab = load_vocabulary_file(os.path.join(base_dir, vocab_path))
    kind = spec.get("kind")
    if kind == "synthetic":
        return make_synthetic(
            SyntheticModelSpec(
                vocab=vocab,
                seed=int(spec.get("seed", 0)),
                order=int(spec.get("order", 3)),
                concentration=float(spec.get("concentration", 2.0)),
            )
        )
    if kind == "external":
        endpoint = spec.get("endpoint")
        if not isinstance(endpoint, dict):
            raise ParameterError("external provider spec needs an 'endpoint' object")
        return connect_external(endpoint, vocab, top_k_hint=spec.get("top_k_hint"))
    raise ParameterError(f"unknown provider kind {kind!r}")


def load_session_file(path: str, key: Key | None = None, mode: str | None = None) -> SessionFile:
    """Load a descriptor; ``key``/``mode`` override the file's values."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        raw = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParameterError(f"session descriptor {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("schema") != SCHEMA:
        raise ParameterError(f"session descriptor must carry \"schema\": {SCHEMA}")
    if key is None:
        key_hex = raw.get("key_hex")
        if key_hex is None:
            raise ParameterError("no key: pass one explicitly or put key_hex in the descriptor")
        key = Key.from_hex(key_hex)
    trunc_raw = raw.get("truncation", {})
    truncation = TruncationConfig(
        temperature=float(trunc_raw.get("temperature", 1.0)),
        top_k=trunc_raw.get("top_k"),
        top_p=trunc_raw.get("top_p"),
    )
    provider = _build_provider(raw.get("provider", {}), os.path.dirname(os.path.abspath(path)))
    session = StegoSession(
        key=key,
        provider=provider,
        truncation=truncation,
        context=tuple(raw.get("context", ())),
        max_steps=int(raw.get("max_steps", 1024)),
        disambiguation=mode if mode is not None else raw.get("disambiguation", "syncpool"),
    )
    return SessionFile(session=session, sha256=hashlib.sha256(data).hexdigest(), raw=raw)
