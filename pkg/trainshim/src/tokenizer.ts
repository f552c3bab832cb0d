/**
 * Character-level tokenizer. One id per character guarantees that segment
 * boundaries always fall on token boundaries, so the supervision mask maps
 * one-to-one onto target positions without any re-tokenization fixups.
 *
 * Encoding prepends BOS; target position t predicts character t, so the
 * mask over targets is exactly the per-character supervision flags.
 */
import type { TrainingExample } from "./data.js";

export const PAD_ID = 0;
export const BOS_ID = 1;
const SPECIALS = 2;

export interface EncodedExample {
  ids: Int32Array;       // [BOS, c0, c1, ...]
  mask: Uint8Array;      // aligned to targets (c0, c1, ...)
  supervisedCount: number;
}

export class CharTokenizer {
  readonly chars: string[];
  private index: Map<string, number>;

  constructor(chars: string[]) {
    this.chars = chars;
    this.index = new Map(chars.map((c, i) => [c, i + SPECIALS]));
  }

  static fromCorpus(examples: TrainingExample[]): CharTokenizer {
    const seen = new Set<string>();
    for (const example of examples) {
      for (const segment of example.segments) {
        for (const ch of segment.text) seen.add(ch);
      }
    }
    return new CharTokenizer([...seen].sort());
  }

  get vocabSize(): number {
    return this.chars.length + SPECIALS;
  }

  charId(ch: string): number {
    const id = this.index.get(ch);
    if (id === undefined) throw new Error(`character ${JSON.stringify(ch)} not in vocabulary`);
    return id;
  }

  encode(example: TrainingExample): EncodedExample {
    const ids: number[] = [BOS_ID];
    const mask: number[] = [];
    for (const segment of example.segments) {
      for (const ch of segment.text) {
        ids.push(this.charId(ch));
        mask.push(segment.supervised ? 1 : 0);
      }
    }
    const supervisedCount = mask.reduce((a, b) => a + b, 0);
    if (supervisedCount === 0) {
      throw new Error(`example ${example.sampleId} has no supervised characters`);
    }
    return {
      ids: Int32Array.from(ids),
      mask: Uint8Array.from(mask),
      supervisedCount,
    };
  }

  decode(ids: ArrayLike<number>): string {
    let out = "";
    for (let i = 0; i < ids.length; i++) {
      const id = ids[i];
      if (id >= SPECIALS) out += this.chars[id - SPECIALS];
    }
    return out;
  }
}
