/**
 * Wire protocol frames: newline-delimited JSON, one frame per line.
 *
 * Probabilities serialize through JSON.stringify, which emits the shortest
 * decimal that round-trips the exact double, so the consuming side parses
 * bit-identical values.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloFrame {
  type: 'hello';
  protocol: number;
}

export interface ReadyFrame {
  type: 'ready';
  vocab_sha256: string;
  vocab_size: number;
}

export interface PredictFrame {
  type: 'predict';
  context: number[];
  top_k: number | null;
}

export interface DistFrame {
  type: 'dist';
  entries: [number, number][];
}

export interface ErrorFrame {
  type: 'error';
  message: string;
}

export type RequestFrame = HelloFrame | PredictFrame;
export type ResponseFrame = ReadyFrame | DistFrame | ErrorFrame;

export function serializeFrame(frame: ResponseFrame): string {
  return JSON.stringify(frame);
}

export function errorFrame(message: string): ErrorFrame {
  return { type: 'error', message };
}

/** Parse one request line; returns an error string instead of throwing. */
export function parseRequest(line: string): { frame?: RequestFrame; error?: string } {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch (exc) {
    return { error: `malformed frame: ${(exc as Error).message}` };
  }
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    return { error: 'frame must be a JSON object' };
  }
  const frame = value as Record<string, unknown>;
  if (frame.type === 'hello') {
    if (typeof frame.protocol !== 'number') {
      return { error: 'hello frame needs a numeric protocol field' };
    }
    return { frame: { type: 'hello', protocol: frame.protocol } };
  }
  if (frame.type === 'predict') {
    const context = frame.context;
    if (!Array.isArray(context) || context.some((t) => !Number.isInteger(t) || (t as number) < 0)) {
      return { error: 'predict frame needs a context array of non-negative integers' };
    }
    const topK = frame.top_k ?? null;
    if (topK !== null && (!Number.isInteger(topK) || (topK as number) < 1)) {
      return { error: 'top_k must be null or a positive integer' };
    }
    return { frame: { type: 'predict', context: context as number[], top_k: topK as number | null } };
  }
  return { error: `unknown frame type ${JSON.stringify(frame.type)}` };
}
