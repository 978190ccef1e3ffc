/**
 * Vocabulary export: tokenizer.json -> canonical vocabulary file.
 *
 * Each exported subword is the exact text the tokenizer's decoder would
 * contribute for that single token, so core-side concatenation reproduces
 * native decode. Tokenizers that cannot honour that contract are refused
 * with a diagnostic listing the offending ids.
 */

import { readFileSync, writeFileSync } from 'node:fs';

import { checkConcatenative, exportProblems, loadTokenizer } from './tokenizer.js';
import { BridgeError, VocabEntry, serializeVocabulary, sha256Hex } from './vocab.js';

export interface ExportResult {
  entries: VocabEntry[];
  bytes: Buffer;
  sha256: string;
}

export function exportVocabulary(tokenizerDoc: unknown, sampleSequences = 100): ExportResult {
  const tok = loadTokenizer(tokenizerDoc);
  const problems = exportProblems(tok);
  if (problems.length > 0) {
    const listing = problems
      .slice(0, 20)
      .map((p) => `${p.id} (${p.reason})`)
      .join(', ');
    const suffix = problems.length > 20 ? ` and ${problems.length - 20} more` : '';
    throw new BridgeError(
      `export refused: ${problems.length} token(s) cannot be rendered as UTF-8 text pieces: ${listing}${suffix}`,
    );
  }

  // decode-equivalence self-check on deterministic pseudo-random sequences
  const ids = tok.pieces.map((p) => p.id);
  const sequences: number[][] = [];
  let state = 0x6d2b79f5;
  const nextIndex = () => {
    // xorshift: deterministic sampling, no RNG dependency
    state ^= state << 13;
    state ^= state >>> 17;
    state ^= state << 5;
    state >>>= 0;
    return state % ids.length;
  };
  for (let s = 0; s < sampleSequences; s++) {
    const length = 1 + (s % 16);
    sequences.push(Array.from({ length }, () => ids[nextIndex()]));
  }
  const check = checkConcatenative(tok, sequences);
  if (!check.ok) {
    throw new BridgeError(
      `export refused: native decode is not concatenative on ${check.failures.length} sampled sequence(s)`,
    );
  }

  const entries = tok.pieces.map((p) => ({ id: p.id, subword: p.text! }));
  const bytes = serializeVocabulary(entries);
  return { entries, bytes, sha256: sha256Hex(bytes) };
}

export function exportVocabularyFile(tokenizerPath: string, outPath: string): ExportResult {
  const doc = JSON.parse(readFileSync(tokenizerPath, 'utf-8'));
  const result = exportVocabulary(doc);
  writeFileSync(outPath, result.bytes);
  return result;
}
