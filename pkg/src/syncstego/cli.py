"""Command-line entry point.

Exit codes are stable API: 0 ok, 2 usage, 3 capacity exhausted,
4 desynchronization, 5 provider failure, 1 anything else. Failures print one
machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

from .codec import bits_to_bytes, bytes_to_bits
from .descriptor import SessionFile, load_session_file
from .errors import (
    CapacityExhaustedError,
    DesynchronizationError,
    ParameterError,
    ProviderError,
    VocabularyFormatError,
    VocabularyValidationError,
)
from .fixtures import regenerate, run_fixtures
from .harness import SweepConfig, run_sweep
from .metrics import ambiguity_frequency, format_report_table
from .pipeline import BASELINE, SYNCPOOL, embed, extract
from .rng import Key
from .vocab import dump_vocabulary, generate_vocabulary

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_DESYNC = 4
EXIT_PROVIDER = 5

SCHEMA = 1
LENGTH_HEADER_BITS = 32
DEFAULT_K_SWEEP = "16,32,64,128,256"


class _CliError(Exception):
    def __init__(self, message: str, exit_code: int, step: int | None = None):
        super().__init__(message)
        self.exit_code = exit_code
        self.step = step


# "baseline" is the user-facing name of the ambiguity-unaware mode; the
# session descriptor stores it as disambiguation "none".
MODE_CHOICES = (SYNCPOOL, "baseline", BASELINE)


def _canon_mode(mode: str | None) -> str | None:
    return BASELINE if mode == "baseline" else mode


def _resolve_key(args) -> Key | None:
    sources = [s for s in (args.key_hex, args.key_file, args.key_env) if s]
    if len(sources) > 1:
        raise _CliError("pass at most one of --key-hex/--key-file/--key-env", EXIT_USAGE)
    if args.key_hex:
        return Key.from_hex(args.key_hex)
    if args.key_file:
        with open(args.key_file, "r", encoding="utf-8") as fh:
            return Key.from_hex(fh.read())
    if args.key_env:
        value = os.environ.get(args.key_env)
        if value is None:
            raise _CliError(f"environment variable {args.key_env} is not set", EXIT_USAGE)
        return Key.from_hex(value)
    return None


def _load_session(args, mode: str | None = None) -> SessionFile:
    key = _resolve_key(args)
    try:
        return load_session_file(args.session, key=key, mode=_canon_mode(mode))
    except ParameterError as exc:
        if "no key" in str(exc):
            raise _CliError(str(exc), EXIT_USAGE) from exc
        raise


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def _write_json(path: str, doc: dict) -> None:
    payload = (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")
    _write_output(path, payload)


def _audit_doc(sess: SessionFile, mode: str, records, extra: dict, mask_timing: bool) -> dict:
    doc = {
        "schema": SCHEMA,
        "session_sha256": sess.sha256,
        "mode": mode,
        "records": [rec.to_dict() for rec in records],
    }
    doc.update(extra)
    if mask_timing:
        doc["timing"] = {"masked": True}
    return doc


def cmd_embed(args) -> int:
    sess = _load_session(args, mode=args.mode)
    message = _read_input(args.infile)
    if not message:
        raise _CliError("message is empty", EXIT_USAGE)
    bits = bytes_to_bits(message)
    framed = format(len(bits), f"0{LENGTH_HEADER_BITS}b") + bits
    start = time.perf_counter()
    out = embed(sess.session, framed)
    elapsed = time.perf_counter() - start
    _write_output(args.out, out.stegotext)
    audit_path = args.audit or (args.out + ".audit.json" if args.out != "-" else "-")
    _write_json(
        audit_path,
        _audit_doc(
            sess,
            sess.session.disambiguation,
            out.records,
            {
                "token_ids": out.token_ids,
                "padded_bits": out.padded_bits,
                "embedded_bits": len(framed) + out.padded_bits,
                "stegotext_sha256": hashlib.sha256(out.stegotext).hexdigest(),
                "timing": {"stego_s": elapsed},
            },
            args.mask_timing,
        ),
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    sess = _load_session(args, mode=args.mode)
    stegotext = _read_input(args.infile)
    if not stegotext:
        raise _CliError("stegotext is empty", EXIT_USAGE)
    start = time.perf_counter()
    out = extract(sess.session, stegotext)
    elapsed = time.perf_counter() - start
    if len(out.bits) < LENGTH_HEADER_BITS:
        raise _CliError(
            f"recovered only {len(out.bits)} bits, not enough for the length header",
            EXIT_DESYNC,
        )
    declared = int(out.bits[:LENGTH_HEADER_BITS], 2)
    body = out.bits[LENGTH_HEADER_BITS:]
    if declared % 8 != 0 or declared > len(body):
        raise _CliError(
            f"length header declares {declared} bits but {len(body)} were recovered; "
            "wrong key or corrupted stegotext",
            EXIT_DESYNC,
        )
    _write_output(args.out, bits_to_bytes(body[:declared]))
    if args.audit:
        _write_json(
            args.audit,
            _audit_doc(
                sess,
                sess.session.disambiguation,
                out.records,
                {
                    "token_ids": out.token_ids,
                    "recovered_bits": len(out.bits),
                    "message_bits": declared,
                    "timing": {"stego_s": elapsed},
                },
                args.mask_timing,
            ),
        )
    return EXIT_OK


def _parse_sweep(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise _CliError(f"bad --k-sweep value: {exc}", EXIT_USAGE) from exc
    if not values or any(v < 1 for v in values):
        raise _CliError("--k-sweep needs positive integers", EXIT_USAGE)
    return values


def cmd_eval(args) -> int:
    sess = _load_session(args)
    base = sess.session
    rows = []
    record_lines = []
    for k in _parse_sweep(args.k_sweep):
        for mode in (BASELINE, SYNCPOOL):
            cfg = SweepConfig(
                provider=base.provider,
                truncation=type(base.truncation)(
                    temperature=base.truncation.temperature,
                    top_k=k,
                    top_p=base.truncation.top_p,
                ),
                mode=mode,
                n_sessions=args.sessions,
                message_bits=args.message_bits,
                seed=args.seed,
                max_steps=base.max_steps,
                context=base.context,
                ambiguity_samples=(args.amb_samples, args.amb_steps),
            )
            report, session_results = run_sweep(cfg, k_label=k)
            if args.mask_timing:
                report.total_time_s = 0.0
                report.ave_time_per_bit_s = 0.0
            rows.append(report)
            if args.records:
                for s_idx, result in enumerate(session_results):
                    for rec in result.embed_records:
                        line = {"k": k, "mode": mode, "session": s_idx}
                        line.update(rec.to_dict())
                        record_lines.append(json.dumps(line, sort_keys=True))
    table = format_report_table(rows)
    doc = {
        "schema": SCHEMA,
        "session_sha256": sess.sha256,
        "rows": [r.to_dict() for r in rows],
    }
    if args.out:
        _write_json(args.out + ".json", doc)
        _write_output(args.out + ".txt", (table + "\n").encode("utf-8"))
    if args.records:
        _write_output(args.records, ("\n".join(record_lines) + "\n").encode("utf-8"))
    print(table)
    return EXIT_OK


def cmd_gen_vocab(args) -> int:
    vocab = generate_vocabulary(args.size, args.richness, args.seed)
    _write_output(args.out, dump_vocabulary(vocab))
    return EXIT_OK


def cmd_ambiguity_freq(args) -> int:
    sess = _load_session(args)
    base = sess.session
    rows = []
    for k in _parse_sweep(args.k_sweep):
        freq = ambiguity_frequency(
            base.provider,
            type(base.truncation)(
                temperature=base.truncation.temperature, top_k=k, top_p=base.truncation.top_p
            ),
            args.samples,
            args.steps,
            args.seed,
            base.context,
        )
        rows.append({"k": k, "frequency": freq})
        print(f"k={k:<6d} ambiguity_frequency={freq:.4f}")
    if args.out:
        _write_json(args.out, {"schema": SCHEMA, "session_sha256": sess.sha256, "rows": rows})
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.regenerate:
        regenerate(args.path)
        print(f"regenerated fixtures under {args.path}")
        return EXIT_OK
    results = run_fixtures(args.path)
    failures = 0
    for res in results:
        if res.ok:
            print(f"PASS {res.name}")
        else:
            failures += 1
            print(f"FAIL {res.name}: {res.detail}")
    print(f"{len(results) - failures}/{len(results)} fixture cases passed")
    return EXIT_OK if failures == 0 else EXIT_OTHER


def _add_key_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--key-hex", help="32-byte key as hex")
    p.add_argument("--key-file", help="file containing the key as hex")
    p.add_argument("--key-env", help="environment variable containing the key as hex")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syncstego")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a message file into stegotext")
    p.add_argument("--session", required=True)
    _add_key_flags(p)
    p.add_argument("--in", dest="infile", default="-", help="message bytes (default stdin)")
    p.add_argument("--out", required=True, help="stegotext output path")
    p.add_argument("--audit", help="audit JSON path (default <out>.audit.json)")
    p.add_argument("--mode", choices=list(MODE_CHOICES))
    p.add_argument("--mask-timing", action="store_true")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover a message file from stegotext")
    p.add_argument("--session", required=True)
    _add_key_flags(p)
    p.add_argument("--in", dest="infile", required=True, help="stegotext path")
    p.add_argument("--out", required=True, help="message output path")
    p.add_argument("--audit")
    p.add_argument("--mode", choices=list(MODE_CHOICES))
    p.add_argument("--mask-timing", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="run the embed/extract sweep and report metrics")
    p.add_argument("--session", required=True)
    _add_key_flags(p)
    p.add_argument("--k-sweep", default=DEFAULT_K_SWEEP)
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--message-bits", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amb-samples", type=int, default=20)
    p.add_argument("--amb-steps", type=int, default=50)
    p.add_argument("--out", help="report path prefix (writes .json and .txt)")
    p.add_argument("--records", help="dump per-step records as JSON-lines to this path")
    p.add_argument("--mask-timing", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-vocab", help="generate a synthetic vocabulary file")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--richness", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_vocab)

    p = sub.add_parser("ambiguity-freq", help="measure prefix-ambiguity frequency per k")
    p.add_argument("--session", required=True)
    _add_key_flags(p)
    p.add_argument("--k-sweep", default=DEFAULT_K_SWEEP)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ambiguity_freq)

    p = sub.add_parser("fixtures", help="run (or regenerate) the conformance fixture suite")
    p.add_argument("--path", default="fixtures")
    p.add_argument("--regenerate", action="store_true")
    p.set_defaults(func=cmd_fixtures)

    return parser


def _fail(exc: BaseException, exit_code: int, step: int | None = None) -> int:
    doc = {
        "schema": SCHEMA,
        "error": type(exc).__name__.lstrip("_"),
        "message": str(exc),
        "exit_code": exit_code,
    }
    if step is not None:
        doc["step"] = step
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        return _fail(exc, exc.exit_code, exc.step)
    except CapacityExhaustedError as exc:
        return _fail(exc, EXIT_CAPACITY)
    except DesynchronizationError as exc:
        return _fail(exc, EXIT_DESYNC, exc.step)
    except ProviderError as exc:
        return _fail(exc, EXIT_PROVIDER)
    except (ParameterError, VocabularyFormatError, VocabularyValidationError, OSError) as exc:
        return _fail(exc, EXIT_OTHER)


if __name__ == "__main__":
    sys.exit(main())
