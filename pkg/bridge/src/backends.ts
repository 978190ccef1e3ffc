/**
 * Distribution backends behind the serve loop.
 *
 * A backend maps a context (token ids) to a full next-token distribution.
 * The protocol-critical contract is determinism: identical context must
 * yield bit-identical probabilities, because the receiving side replays the
 * sender's sampling path through its own connection.
 */

import { createHash } from 'node:crypto';

import { BridgeError } from './vocab.js';

export interface Backend {
  predict(context: number[]): Promise<Float64Array>;
}

export interface TestBackendOptions {
  seed: number;
  order: number;
  concentration: number;
}

/**
 * Deterministic hash-driven backend for protocol tests and offline
 * end-to-end runs. Weights come from a SHA-256 counter stream over
 * (seed, context window); all arithmetic is IEEE double, so every platform
 * produces identical bytes on the wire.
 */
export class TestBackend implements Backend {
  private readonly size: number;
  private readonly seed8: Buffer;
  private readonly sqrtSteps: number | null;

  constructor(size: number, private readonly options: TestBackendOptions) {
    if (options.order < 0) throw new BridgeError('order must be >= 0');
    if (options.concentration <= 0) throw new BridgeError('concentration must be positive');
    this.size = size;
    this.seed8 = Buffer.alloc(8);
    this.seed8.writeBigUInt64BE(BigInt(options.seed));
    const log2 = Math.log2(options.concentration);
    this.sqrtSteps = Number.isInteger(log2) && log2 >= 0 ? log2 : null;
  }

  async predict(context: number[]): Promise<Float64Array> {
    const window = this.options.order > 0 ? context.slice(-this.options.order) : [];
    const hasher = createHash('sha256').update(this.seed8);
    for (const id of window) {
      const be = Buffer.alloc(8);
      be.writeBigUInt64BE(BigInt(id));
      hasher.update(be);
    }
    const h = hasher.digest();
    const weights = new Float64Array(this.size);
    let sum = 0;
    for (let block = 0; block * 4 < this.size; block++) {
      const counter = Buffer.alloc(4);
      counter.writeUInt32BE(block);
      const digest = createHash('sha256').update(h).update(counter).digest();
      for (let j = 0; j < 4; j++) {
        const index = block * 4 + j;
        if (index >= this.size) break;
        const u = digest.readBigUInt64BE(j * 8);
        // ((u >> 11) + 1) / 2^53 is an exact dyadic in (0, 1]
        let w = Number((u >> 11n) + 1n) * 2 ** -53;
        if (this.sqrtSteps === null) {
          w = Math.pow(w, 1 / this.options.concentration);
        } else {
          for (let s = 0; s < this.sqrtSteps; s++) w = Math.sqrt(w);
        }
        weights[index] = w;
      }
    }
    for (let i = 0; i < this.size; i++) sum += weights[i];
    for (let i = 0; i < this.size; i++) weights[i] /= sum;
    return weights;
  }
}

export interface TransformersBackendOptions {
  model: string;
  device?: string;
}

/**
 * Real pretrained causal LM via @huggingface/transformers (optional install,
 * downloads weights on first use). Reports softmaxed probabilities at
 * temperature 1; all truncation/temperature shaping happens core-side.
 */
export class TransformersBackend implements Backend {
  private constructor(
    private readonly model: any,
    readonly vocabSize: number,
  ) {}

  static async create(options: TransformersBackendOptions): Promise<TransformersBackend> {
    let transformers: any;
    try {
      transformers = await import('@huggingface/transformers' as string);
    } catch {
      throw new BridgeError(
        'the transformers backend needs the optional dependency @huggingface/transformers ' +
          '(npm install @huggingface/transformers)',
      );
    }
    const model = await transformers.AutoModelForCausalLM.from_pretrained(options.model, {
      device: options.device,
    });
    return new TransformersBackend(model, Number(model.config.vocab_size));
  }

  async predict(context: number[]): Promise<Float64Array> {
    if (context.length === 0) {
      throw new BridgeError('the transformers backend needs a nonempty context');
    }
    const { Tensor } = await import('@huggingface/transformers' as string);
    const input = new Tensor('int64', BigInt64Array.from(context.map(BigInt)), [1, context.length]);
    const output = await this.model({ input_ids: input, attention_mask: input.mul(0n).add(1n) });
    const logits = output.logits;
    const [, seqLen, vocabSize] = logits.dims as number[];
    const data = logits.data as Float32Array;
    const offset = (seqLen - 1) * vocabSize;
    const probs = new Float64Array(vocabSize);
    let max = -Infinity;
    for (let i = 0; i < vocabSize; i++) max = Math.max(max, data[offset + i]);
    let sum = 0;
    for (let i = 0; i < vocabSize; i++) {
      probs[i] = Math.exp(data[offset + i] - max);
      sum += probs[i];
    }
    for (let i = 0; i < vocabSize; i++) probs[i] /= sum;
    return probs;
  }
}
