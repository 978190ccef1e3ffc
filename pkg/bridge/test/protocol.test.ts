import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';

import { TestBackend } from '../src/backends.js';
import { parseRequest } from '../src/protocol.js';
import { ServerConfig, handleFrame, handleLine } from '../src/server.js';
import { serializeVocabulary, sha256Hex } from '../src/vocab.js';

function makeConfig(size = 8, defaultTopK: number | null = null): ServerConfig {
  const vocab = Array.from({ length: size }, (_, i) => ({
    id: i,
    subword: String.fromCharCode(97 + i),
  }));
  const bytes = serializeVocabulary(vocab);
  return {
    vocab,
    vocabSha256: sha256Hex(bytes),
    backend: new TestBackend(size, { seed: 5, order: 2, concentration: 2 }),
    defaultTopK,
  };
}

describe('request parsing', () => {
  it('accepts hello and predict', () => {
    expect(parseRequest('{"type":"hello","protocol":1}').frame).toEqual({
      type: 'hello',
      protocol: 1,
    });
    expect(parseRequest('{"type":"predict","context":[1,2],"top_k":null}').frame).toEqual({
      type: 'predict',
      context: [1, 2],
      top_k: null,
    });
  });

  it('rejects garbage without throwing', () => {
    expect(parseRequest('not json').error).toMatch(/malformed/);
    expect(parseRequest('[1,2]').error).toMatch(/object/);
    expect(parseRequest('{"type":"predict","context":"x"}').error).toMatch(/context/);
    expect(parseRequest('{"type":"teleport"}').error).toMatch(/unknown frame type/);
  });
});

describe('serve handler', () => {
  it('answers hello with the vocabulary hash and size', async () => {
    const config = makeConfig();
    const reply = await handleFrame(config, { type: 'hello', protocol: 1 });
    expect(reply).toEqual({
      type: 'ready',
      vocab_sha256: config.vocabSha256,
      vocab_size: 8,
    });
  });

  it('rejects other protocol versions with an error frame', async () => {
    const reply = await handleFrame(makeConfig(), { type: 'hello', protocol: 2 });
    expect(reply.type).toBe('error');
  });

  it('serves sorted distributions that sum to at most one', async () => {
    const reply = await handleFrame(makeConfig(), { type: 'predict', context: [0, 1], top_k: null });
    expect(reply.type).toBe('dist');
    const entries = (reply as any).entries as [number, number][];
    expect(entries.length).toBe(8);
    for (let i = 1; i < entries.length; i++) {
      const [prevId, prevProb] = entries[i - 1];
      const [id, prob] = entries[i];
      expect(prevProb > prob || (prevProb === prob && prevId < id)).toBe(true);
    }
    const total = entries.reduce((acc, [, p]) => acc + p, 0);
    expect(total).toBeLessThanOrEqual(1 + 1e-9);
    expect(total).toBeGreaterThan(0.999999);
  });

  it('is deterministic across calls and instances', async () => {
    const a = await handleLine(makeConfig(), '{"type":"predict","context":[3],"top_k":null}');
    const b = await handleLine(makeConfig(), '{"type":"predict","context":[3],"top_k":null}');
    expect(a).toBe(b);
  });

  it('honours the top_k transport hint', async () => {
    const reply = await handleFrame(makeConfig(), { type: 'predict', context: [], top_k: 3 });
    expect((reply as any).entries.length).toBe(3);
    const hinted = await handleFrame(makeConfig(8, 4), { type: 'predict', context: [], top_k: null });
    expect((hinted as any).entries.length).toBe(4);
  });

  it('answers unknown context ids with an error frame, stream intact', async () => {
    const config = makeConfig();
    const bad = await handleLine(config, '{"type":"predict","context":[99],"top_k":null}');
    expect(JSON.parse(bad).type).toBe('error');
    const good = await handleLine(config, '{"type":"predict","context":[1],"top_k":null}');
    expect(JSON.parse(good).type).toBe('dist');
  });

  it('answers malformed lines with an error frame', async () => {
    const reply = await handleLine(makeConfig(), '{{{nope');
    expect(JSON.parse(reply).type).toBe('error');
  });
});

describe('golden transcript', () => {
  it('replays byte-exact', async () => {
    const lines = readFileSync(new URL('./fixtures/transcript.jsonl', import.meta.url), 'utf-8')
      .split('\n')
      .filter((line) => line.length > 0);
    const config = makeConfig(8);
    for (let i = 0; i < lines.length; i += 2) {
      const request = lines[i];
      const expected = lines[i + 1];
      expect(await handleLine(config, request)).toBe(expected);
    }
  });
});
