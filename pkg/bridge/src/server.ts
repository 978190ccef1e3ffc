/**
 * The serve loop: line-delimited JSON over stdio or TCP.
 *
 * Protocol errors are answered with error frames; a bad request never
 * crashes the stream. One request is handled at a time per connection.
 */

import { createInterface } from 'node:readline';
import { createServer } from 'node:net';
import type { Readable, Writable } from 'node:stream';

import { Backend } from './backends.js';
import {
  PROTOCOL_VERSION,
  RequestFrame,
  ResponseFrame,
  errorFrame,
  parseRequest,
  serializeFrame,
} from './protocol.js';
import { VocabEntry } from './vocab.js';

export interface ServerConfig {
  vocab: VocabEntry[];
  vocabSha256: string;
  backend: Backend;
  /** pre-truncation hint applied when a request carries top_k null */
  defaultTopK: number | null;
}

const idCache = new WeakMap<ServerConfig, Set<number>>();

function knownIds(config: ServerConfig): Set<number> {
  let ids = idCache.get(config);
  if (ids === undefined) {
    ids = new Set(config.vocab.map((e) => e.id));
    idCache.set(config, ids);
  }
  return ids;
}

export async function handleFrame(config: ServerConfig, frame: RequestFrame): Promise<ResponseFrame> {
  if (frame.type === 'hello') {
    if (frame.protocol !== PROTOCOL_VERSION) {
      return errorFrame(`unsupported protocol ${frame.protocol}, this bridge speaks ${PROTOCOL_VERSION}`);
    }
    return {
      type: 'ready',
      vocab_sha256: config.vocabSha256,
      vocab_size: config.vocab.length,
    };
  }
  const ids = knownIds(config);
  for (const id of frame.context) {
    if (!ids.has(id)) return errorFrame(`unknown token id ${id} in context`);
  }
  let probs: Float64Array;
  try {
    probs = await config.backend.predict(frame.context);
  } catch (exc) {
    return errorFrame(`backend failure: ${(exc as Error).message}`);
  }
  if (probs.length !== config.vocab.length) {
    return errorFrame(
      `backend returned ${probs.length} probabilities for ${config.vocab.length} tokens`,
    );
  }
  // prob desc, ties id asc -- the order the protocol pins
  let entries: [number, number][] = config.vocab.map((e, i) => [e.id, probs[i]]);
  entries.sort((a, b) => (b[1] - a[1]) || (a[0] - b[0]));
  const topK = frame.top_k ?? config.defaultTopK;
  if (topK !== null) {
    entries = entries.slice(0, topK);
  }
  return { type: 'dist', entries };
}

export async function handleLine(config: ServerConfig, line: string): Promise<string> {
  const { frame, error } = parseRequest(line);
  if (error !== undefined) {
    return serializeFrame(errorFrame(error));
  }
  return serializeFrame(await handleFrame(config, frame!));
}

export async function serveStream(config: ServerConfig, input: Readable, output: Writable): Promise<void> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) continue;
    output.write((await handleLine(config, line)) + '\n');
  }
}

export function serveTcp(config: ServerConfig, port: number, host = '127.0.0.1'): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer((socket) => {
      serveStream(config, socket, socket).catch(() => socket.destroy());
    });
    server.on('error', reject);
    server.listen(port, host, () => {
      const address = server.address();
      resolve(typeof address === 'object' && address !== null ? address.port : port);
    });
  });
}
