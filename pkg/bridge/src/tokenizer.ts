/**
 * Minimal tokenizer.json reader for vocabulary export.
 *
 * Only decode-side behaviour matters here: the bridge never tokenizes text,
 * it renders each token id to the exact byte piece the tokenizer's decoder
 * would contribute, so that core-side byte concatenation reproduces native
 * decoding. Supported decoders: byte-level (GPT-2 family) and identity
 * (plain concatenation). Anything whose decode is not per-token
 * concatenative is refused with a diagnostic.
 */

import { BridgeError } from './vocab.js';

export interface TokenPiece {
  id: number;
  /** rendered bytes this token contributes to decoded text */
  piece: Buffer;
  /** piece as UTF-8 text; undefined when the bytes are not standalone UTF-8 */
  text?: string;
}

export interface LoadedTokenizer {
  kind: 'byte-level' | 'identity';
  pieces: TokenPiece[];
  /** native sequence decode, for equivalence checking */
  decode(ids: number[]): Buffer;
}

/** GPT-2 byte <-> unicode table: printable bytes map to themselves, the rest
 * to U+0100.. in order. */
function byteToUnicodeTable(): Map<number, string> {
  const printable: number[] = [];
  for (let b = 0x21; b <= 0x7e; b++) printable.push(b);
  for (let b = 0xa1; b <= 0xac; b++) printable.push(b);
  for (let b = 0xae; b <= 0xff; b++) printable.push(b);
  const table = new Map<number, string>();
  const present = new Set(printable);
  for (const b of printable) table.set(b, String.fromCharCode(b));
  let n = 0;
  for (let b = 0; b < 256; b++) {
    if (!present.has(b)) {
      table.set(b, String.fromCharCode(256 + n));
      n += 1;
    }
  }
  return table;
}

const BYTE_TO_UNICODE = byteToUnicodeTable();
const UNICODE_TO_BYTE = new Map<string, number>(
  [...BYTE_TO_UNICODE.entries()].map(([b, ch]) => [ch, b]),
);

function byteLevelPiece(tokenString: string): Buffer {
  const bytes: number[] = [];
  for (const ch of tokenString) {
    const b = UNICODE_TO_BYTE.get(ch);
    if (b === undefined) {
      throw new BridgeError(`token string contains non-byte-level character ${JSON.stringify(ch)}`);
    }
    bytes.push(b);
  }
  return Buffer.from(bytes);
}

function isStandaloneUtf8(piece: Buffer): boolean {
  const text = piece.toString('utf-8');
  return Buffer.from(text, 'utf-8').equals(piece);
}

export function loadTokenizer(doc: unknown): LoadedTokenizer {
  if (typeof doc !== 'object' || doc === null) {
    throw new BridgeError('tokenizer.json must be a JSON object');
  }
  const root = doc as Record<string, any>;
  const model = root.model;
  if (!model || model.type !== 'BPE' || typeof model.vocab !== 'object') {
    throw new BridgeError(`unsupported tokenizer model ${JSON.stringify(model?.type)}: only BPE vocab maps are supported`);
  }
  const decoderType: string | undefined = root.decoder?.type;
  let kind: LoadedTokenizer['kind'];
  if (decoderType === 'ByteLevel') {
    kind = 'byte-level';
  } else if (decoderType === undefined || decoderType === null) {
    kind = 'identity';
  } else {
    throw new BridgeError(
      `decoder type ${JSON.stringify(decoderType)} is not per-token concatenative; export refused`,
    );
  }

  const pieces: TokenPiece[] = [];
  for (const [tokenString, id] of Object.entries(model.vocab as Record<string, number>)) {
    const piece = kind === 'byte-level' ? byteLevelPiece(tokenString) : Buffer.from(tokenString, 'utf-8');
    pieces.push({
      id,
      piece,
      text: isStandaloneUtf8(piece) ? piece.toString('utf-8') : undefined,
    });
  }
  pieces.sort((a, b) => a.id - b.id);

  const byId = new Map(pieces.map((p) => [p.id, p]));
  return {
    kind,
    pieces,
    decode(ids: number[]): Buffer {
      const parts = ids.map((id) => {
        const piece = byId.get(id);
        if (piece === undefined) throw new BridgeError(`unknown token id ${id}`);
        return piece.piece;
      });
      return Buffer.concat(parts);
    },
  };
}

export interface ExportProblem {
  id: number;
  reason: string;
}

/** Pieces that cannot be carried by the UTF-8 JSON vocabulary format. */
export function exportProblems(tok: LoadedTokenizer): ExportProblem[] {
  const problems: ExportProblem[] = [];
  for (const piece of tok.pieces) {
    if (piece.text === undefined) {
      problems.push({ id: piece.id, reason: 'piece bytes are not standalone UTF-8' });
    } else if (piece.text.length === 0) {
      problems.push({ id: piece.id, reason: 'piece is empty' });
    }
  }
  return problems;
}

/**
 * Decode-equivalence check: native decode of sampled sequences must equal
 * the concatenation of per-token pieces, the property core-side
 * detokenization relies on.
 */
export function checkConcatenative(
  tok: LoadedTokenizer,
  sequences: number[][],
): { ok: boolean; failures: number[] } {
  const failures: number[] = [];
  sequences.forEach((ids, index) => {
    const native = tok.decode(ids);
    const concat = Buffer.concat(
      ids.map((id) => tok.pieces.find((p) => p.id === id)!.piece),
    );
    if (!native.equals(concat)) failures.push(index);
  });
  return { ok: failures.length === 0, failures };
}
