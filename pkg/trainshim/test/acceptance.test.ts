/**
 * Acceptance gate for the training shim; each criterion prints a pass line
 * and pins its runtime budget.
 */
import { describe, expect, it } from "vitest";
import { REFERENCE_DEFAULTS, emitExternalTrainerConfig, parseExternalTrainerConfig } from "../src/config.js";
import { gradCheck } from "../src/gradcheck.js";
import { fullSequenceLoss } from "../src/loss.js";
import { TinyCausalLM } from "../src/model.js";
import { backward, maskedCrossEntropy } from "../src/tensor.js";
import { trainToy } from "../src/train.js";
import { randomBatch, syntheticCorpus } from "./helpers.js";

function timed(name: string, budgetSeconds: number, body: () => void): void {
  const start = performance.now();
  body();
  const elapsed = (performance.now() - start) / 1000;
  expect(elapsed, `${name} exceeded its ${budgetSeconds}s budget`).toBeLessThan(budgetSeconds);
  console.log(`PASS: ${name} (${elapsed.toFixed(2)}s < ${budgetSeconds}s)`);
}

describe("acceptance", () => {
  it("masking exactness and gradient check", () => {
    timed("masking exactness + finite-difference grad check (20 seeds)", 120, () => {
      // Analytic gradients at mask-false logit positions are identically zero.
      const model = new TinyCausalLM({ vocabSize: 12, dim: 6, layers: 1,
                                       maxSeqLen: 10, seed: 42 });
      const ids = new Int32Array([1, 4, 7, 2, 9, 5, 3]);
      const mask = new Uint8Array([1, 0, 1, 0, 1, 0]);
      const logits = model.forward(ids.subarray(0, ids.length - 1));
      backward(maskedCrossEntropy(logits, ids.subarray(1), mask));
      const v = logits.cols;
      for (let t = 0; t < mask.length; t++) {
        if (mask[t]) continue;
        for (let j = 0; j < v; j++) expect(logits.grad![t * v + j]).toBe(0);
      }

      // Max relative error < 1e-3 over 20 seeds on a <= 1e4-parameter model.
      for (let seed = 0; seed < 20; seed++) {
        const m = new TinyCausalLM({ vocabSize: 12, dim: 6, layers: 1,
                                     maxSeqLen: 10, seed });
        const result = gradCheck(m, randomBatch(seed + 500), 1e-4);
        expect(result.parameterCount).toBeLessThanOrEqual(10_000);
        expect(result.maxRelativeError).toBeLessThan(1e-3);
      }
    });
  });

  it("toy critique training run", () => {
    timed("toy training: 200 steps over 50 masked examples", 120, () => {
      const corpus = syntheticCorpus(50);
      const result = trainToy(corpus, {
        batchSize: 8, learningRate: 1e-3, steps: 200, warmupRatio: 0.1, seed: 0,
      });
      expect(result.finalCorpusLoss).toBeLessThan(result.initialCorpusLoss);

      // All-true mask equals the unmasked full-sequence loss within 1e-6.
      const tokenizer = result.tokenizer;
      const encoded = tokenizer.encode(corpus[0]);
      const allTrue = new Uint8Array(encoded.ids.length - 1).fill(1);
      const masked = result.model.sequenceLoss(encoded.ids, allTrue).data[0];
      const full = fullSequenceLoss(result.model, encoded.ids);
      expect(Math.abs(masked - full)).toBeLessThan(1e-6);
    });
  });

  it("config fidelity", () => {
    timed("external trainer config round-trips the reference defaults", 10, () => {
      const corpus = syntheticCorpus(3);
      const adapter = emitExternalTrainerConfig(corpus, REFERENCE_DEFAULTS);
      const parsed = parseExternalTrainerConfig(JSON.parse(JSON.stringify(adapter)));
      expect(parsed.hyperparameters.learning_rate).toBe(5e-6);
      expect(parsed.hyperparameters.schedule).toBe("cosine_decay");
      expect(parsed.hyperparameters.warmup_ratio).toBe(0.1);
      expect(parsed.hyperparameters.global_batch_size).toBe(512);
      expect(parsed.hyperparameters.epochs).toBe(1);
      expect(parsed.hyperparameters.validation_set).toBe("MATH500");
      for (const conversation of parsed.conversations) {
        for (const message of conversation.messages) {
          expect(message.train).toBe(message.role === "assistant");
        }
      }
    });
  });
});
