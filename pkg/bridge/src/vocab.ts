/**
 * Canonical vocabulary files.
 *
 * The format (and its exact bytes) is the interoperability contract with the
 * stego core: a UTF-8 JSON array of {"id", "subword"} objects, one per line,
 * array order canonical. The handshake hash is the SHA-256 of the exact file
 * bytes.
 */

import { createHash } from 'node:crypto';

export interface VocabEntry {
  id: number;
  subword: string;
}

export class BridgeError extends Error {}

export function serializeVocabulary(entries: VocabEntry[]): Buffer {
  const lines = entries.map((e) => JSON.stringify({ id: e.id, subword: e.subword }));
  return Buffer.from('[\n' + lines.join(',\n') + '\n]\n', 'utf-8');
}

export function parseVocabulary(data: Buffer): VocabEntry[] {
  let parsed: unknown;
  try {
    parsed = JSON.parse(data.toString('utf-8'));
  } catch (exc) {
    throw new BridgeError(`vocabulary file is not valid JSON: ${(exc as Error).message}`);
  }
  if (!Array.isArray(parsed)) {
    throw new BridgeError('vocabulary file must be a JSON array');
  }
  const seenIds = new Set<number>();
  const seenSubwords = new Set<string>();
  const entries: VocabEntry[] = [];
  parsed.forEach((entry, offset) => {
    if (
      typeof entry !== 'object' ||
      entry === null ||
      !Number.isInteger((entry as VocabEntry).id) ||
      typeof (entry as VocabEntry).subword !== 'string' ||
      (entry as VocabEntry).subword.length === 0
    ) {
      throw new BridgeError(`entry ${offset} must be {"id": <int>, "subword": "<nonempty str>"}`);
    }
    const { id, subword } = entry as VocabEntry;
    if (seenIds.has(id)) throw new BridgeError(`duplicate token id ${id}`);
    if (seenSubwords.has(subword)) throw new BridgeError(`duplicate subword ${JSON.stringify(subword)}`);
    seenIds.add(id);
    seenSubwords.add(subword);
    entries.push({ id, subword });
  });
  if (entries.length < 2) throw new BridgeError('vocabulary needs at least 2 tokens');
  return entries;
}

export function sha256Hex(data: Buffer): string {
  return createHash('sha256').update(data).digest('hex');
}
