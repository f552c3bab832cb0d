import type { TrainingExample } from "../src/data.js";
import { CharTokenizer } from "../src/tokenizer.js";
import { makeBatch, MaskedBatch } from "../src/loss.js";
import { mulberry32 } from "../src/rng.js";

/** Synthetic critique-style corpus: prompt unsupervised, verdict supervised. */
export function syntheticCorpus(n: number): TrainingExample[] {
  const examples: TrainingExample[] = [];
  for (let i = 0; i < n; i++) {
    const a = i % 7;
    const b = i % 5;
    const claimed = (a + b + (i % 3 === 0 ? 1 : 0)) % 10;
    const verdict = claimed === a + b ? "right" : "wrong";
    examples.push({
      sampleId: `syn-${i}`,
      variant: "cft",
      segments: [
        { text: `Q: ${a}+${b}\nA: ${claimed}\n`, supervised: false },
        { text: `check: ${verdict} [E]`, supervised: true },
      ],
    });
  }
  return examples;
}

export function corpusBatch(examples: TrainingExample[]): {
  tokenizer: CharTokenizer;
  batch: MaskedBatch;
} {
  const tokenizer = CharTokenizer.fromCorpus(examples);
  return { tokenizer, batch: makeBatch(examples.map((e) => tokenizer.encode(e))) };
}

/** Random short batch over a fixed small vocabulary. */
export function randomBatch(seed: number, rows = 2, vocab = 12, maxLen = 8): MaskedBatch {
  const rng = mulberry32(seed);
  const encoded = [];
  for (let r = 0; r < rows; r++) {
    const len = Math.max(3, Math.floor(rng() * maxLen));
    const ids = new Int32Array(len);
    ids[0] = 1; // BOS
    for (let i = 1; i < len; i++) ids[i] = 2 + Math.floor(rng() * (vocab - 2));
    const mask = new Uint8Array(len - 1);
    let any = 0;
    for (let i = 0; i < mask.length; i++) {
      mask[i] = rng() < 0.5 ? 1 : 0;
      any += mask[i];
    }
    if (!any) mask[0] = 1;
    encoded.push({ ids, mask, supervisedCount: mask.reduce((x, y) => x + y, 0) });
  }
  return makeBatch(encoded);
}
