/**
 * Batch-level masked loss plus an independent unmasked path.
 *
 * The batch loss is the mean NLL over every supervised target position in
 * the batch (positions, not sequences, carry equal weight); prompt tokens
 * are excluded from the denominator entirely. `fullSequenceLoss` computes
 * the all-positions mean through plain array arithmetic, not the autodiff
 * ops, for checking that an all-true mask reproduces it.
 */
import { TinyCausalLM } from "./model.js";
import { backward } from "./tensor.js";
import type { EncodedExample } from "./tokenizer.js";

export interface MaskedBatch {
  rows: EncodedExample[];
}

export function makeBatch(rows: EncodedExample[]): MaskedBatch {
  for (const row of rows) {
    if (row.mask.length !== row.ids.length - 1) {
      throw new Error("mask shape must equal target shape");
    }
    if (row.supervisedCount < 1) {
      throw new Error("each batch row needs at least one supervised position");
    }
  }
  return { rows };
}

/** Mean masked NLL over the batch; no gradients. */
export function batchLoss(model: TinyCausalLM, batch: MaskedBatch): number {
  let total = 0;
  let count = 0;
  for (const row of batch.rows) {
    const loss = model.sequenceLoss(row.ids, row.mask);
    total += loss.data[0] * row.supervisedCount;
    count += row.supervisedCount;
  }
  return total / count;
}

/** Mean masked NLL with gradients accumulated into the model parameters. */
export function batchLossBackward(model: TinyCausalLM, batch: MaskedBatch): number {
  const totalCount = batch.rows.reduce((acc, r) => acc + r.supervisedCount, 0);
  let total = 0;
  for (const row of batch.rows) {
    const loss = model.sequenceLoss(row.ids, row.mask);
    total += loss.data[0] * row.supervisedCount;
    backward(loss, row.supervisedCount / totalCount);
  }
  return total / totalCount;
}

/**
 * Mean NLL over all target positions of one sequence, computed directly
 * from the logits buffer (independent of the masked-loss op's code path).
 */
export function fullSequenceLoss(model: TinyCausalLM, ids: Int32Array): number {
  const logits = model.forward(ids.subarray(0, ids.length - 1));
  const v = logits.cols;
  let total = 0;
  for (let t = 0; t < logits.rows; t++) {
    let max = -Infinity;
    for (let j = 0; j < v; j++) max = Math.max(max, logits.data[t * v + j]);
    let z = 0;
    for (let j = 0; j < v; j++) z += Math.exp(logits.data[t * v + j] - max);
    total += max + Math.log(z) - logits.data[t * v + ids[t + 1]];
  }
  return total / logits.rows;
}
