#!/usr/bin/env node
/**
 * stego-model-bridge <serve|export-vocab> [flags]
 *
 *   serve        --vocab <file> --backend test|transformers [--tcp PORT]
 *                [--seed N] [--order N] [--concentration X]
 *                [--model <hf id>] [--top-k-default N]
 *   export-vocab --tokenizer <tokenizer.json> --out <vocab.json>
 */

import { readFileSync } from 'node:fs';
import process from 'node:process';

import { Backend, TestBackend, TransformersBackend } from './backends.js';
import { exportVocabularyFile } from './export.js';
import { ServerConfig, serveStream, serveTcp } from './server.js';
import { BridgeError, parseVocabulary, sha256Hex } from './vocab.js';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const name = argv[i];
    const value = argv[i + 1];
    if (!name.startsWith('--') || value === undefined) {
      throw new BridgeError(`bad flag pair near ${JSON.stringify(name)}`);
    }
    flags.set(name.slice(2), value);
  }
  return flags;
}

function requireFlag(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new BridgeError(`missing required flag --${name}`);
  return value;
}

async function makeBackend(flags: Map<string, string>, vocabSize: number): Promise<Backend> {
  const kind = flags.get('backend') ?? 'test';
  if (kind === 'test') {
    return new TestBackend(vocabSize, {
      seed: Number(flags.get('seed') ?? 0),
      order: Number(flags.get('order') ?? 3),
      concentration: Number(flags.get('concentration') ?? 2),
    });
  }
  if (kind === 'transformers') {
    const backend = await TransformersBackend.create({
      model: requireFlag(flags, 'model'),
      device: flags.get('device'),
    });
    if (backend.vocabSize !== vocabSize) {
      throw new BridgeError(
        `model vocab size ${backend.vocabSize} does not match vocabulary file size ${vocabSize}`,
      );
    }
    return backend;
  }
  throw new BridgeError(`unknown backend ${JSON.stringify(kind)}`);
}

async function main(): Promise<number> {
  const [, , command, ...rest] = process.argv;
  try {
    if (command === 'export-vocab') {
      const flags = parseFlags(rest);
      const result = exportVocabularyFile(requireFlag(flags, 'tokenizer'), requireFlag(flags, 'out'));
      process.stderr.write(
        `exported ${result.entries.length} tokens, sha256 ${result.sha256}\n`,
      );
      return 0;
    }
    if (command === 'serve') {
      const flags = parseFlags(rest);
      const vocabBytes = readFileSync(requireFlag(flags, 'vocab'));
      const vocab = parseVocabulary(vocabBytes);
      const config: ServerConfig = {
        vocab,
        vocabSha256: sha256Hex(vocabBytes),
        backend: await makeBackend(flags, vocab.length),
        defaultTopK: flags.has('top-k-default') ? Number(flags.get('top-k-default')) : null,
      };
      const tcp = flags.get('tcp');
      if (tcp !== undefined) {
        const port = await serveTcp(config, Number(tcp));
        process.stderr.write(`listening on 127.0.0.1:${port}\n`);
        await new Promise(() => undefined); // run until killed
      } else {
        await serveStream(config, process.stdin, process.stdout);
      }
      return 0;
    }
    process.stderr.write('usage: stego-model-bridge <serve|export-vocab> [flags]\n');
    return 2;
  } catch (exc) {
    if (exc instanceof BridgeError) {
      process.stderr.write(`error: ${exc.message}\n`);
      return 1;
    }
    throw exc;
  }
}

main().then((code) => {
  process.exitCode = code;
});
