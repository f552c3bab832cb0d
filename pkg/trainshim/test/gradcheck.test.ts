import { describe, expect, it } from "vitest";
import { gradCheck } from "../src/gradcheck.js";
import { TinyCausalLM } from "../src/model.js";
import { randomBatch } from "./helpers.js";

describe("finite-difference gradient check", () => {
  it("stays under 1e-3 max relative error across 20 seeds", () => {
    for (let seed = 0; seed < 20; seed++) {
      const model = new TinyCausalLM({
        vocabSize: 12, dim: 6, layers: 1, maxSeqLen: 10, seed,
      });
      const result = gradCheck(model, randomBatch(seed + 100), 1e-4);
      expect(result.parameterCount).toBeLessThanOrEqual(10_000);
      expect(result.coordinatesChecked).toBe(result.parameterCount);
      expect(result.maxRelativeError).toBeLessThan(1e-3);
    }
  });

  it("two-layer model also passes", () => {
    const model = new TinyCausalLM({
      vocabSize: 12, dim: 6, layers: 2, maxSeqLen: 10, seed: 77,
    });
    const result = gradCheck(model, randomBatch(777), 1e-4);
    expect(result.maxRelativeError).toBeLessThan(1e-3);
  });

  it("rejects models above the tractability bound", () => {
    const model = new TinyCausalLM({
      vocabSize: 128, dim: 48, layers: 2, maxSeqLen: 32, seed: 1,
    });
    expect(model.parameterCount()).toBeGreaterThan(10_000);
    expect(() => gradCheck(model, randomBatch(1, 1, 12, 8), 1e-4))
      .toThrow(/small model/);
  });

  it("coordinate sampling caps the work", () => {
    const model = new TinyCausalLM({
      vocabSize: 12, dim: 6, layers: 1, maxSeqLen: 10, seed: 5,
    });
    const result = gradCheck(model, randomBatch(55), 1e-4, 50, 9);
    expect(result.coordinatesChecked).toBe(50);
    expect(result.maxRelativeError).toBeLessThan(1e-3);
  });
});
