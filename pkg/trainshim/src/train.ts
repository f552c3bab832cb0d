/**
 * Toy training loop: Adam over the masked batch loss with a cosine-decay
 * learning-rate schedule and linear warmup. Deterministic given seeds.
 *
 * Full-scale hyperparameters target 7B models and would not move a toy
 * model, so runs default to the scaled values (batch 8, lr 1e-3, 200
 * steps); the provenance block in every artifact records both the original
 * config and the scaling.
 */
import { writeFileSync } from "node:fs";
import { batchLoss, batchLossBackward, makeBatch, MaskedBatch } from "./loss.js";
import { ModelConfig, TinyCausalLM } from "./model.js";
import { mulberry32, shuffleInPlace } from "./rng.js";
import type { Tensor } from "./tensor.js";
import { CharTokenizer, EncodedExample } from "./tokenizer.js";
import type { TrainingExample } from "./data.js";
import type { TrainConfig } from "./config.js";

export interface ToyRunConfig {
  batchSize: number;
  learningRate: number;
  steps: number;
  warmupRatio: number;
  seed: number;
}

export const TOY_DEFAULTS = { batchSize: 8, learningRate: 1e-3, steps: 200 };

export function toToyScale(config: TrainConfig, overrides: Partial<ToyRunConfig> = {}): ToyRunConfig {
  return {
    batchSize: overrides.batchSize ?? TOY_DEFAULTS.batchSize,
    learningRate: overrides.learningRate ?? TOY_DEFAULTS.learningRate,
    steps: overrides.steps ?? TOY_DEFAULTS.steps,
    warmupRatio: overrides.warmupRatio ?? config.warmup_ratio,
    seed: overrides.seed ?? 0,
  };
}

/** Linear warmup into a half-cosine decay toward zero. */
export function cosineWithWarmup(step: number, totalSteps: number,
                                 base: number, warmupRatio: number): number {
  const warmup = Math.floor(totalSteps * warmupRatio);
  if (warmup > 0 && step < warmup) return (base * (step + 1)) / warmup;
  if (totalSteps <= warmup) return base;
  const progress = (step - warmup) / (totalSteps - warmup);
  return base * 0.5 * (1 + Math.cos(Math.PI * progress));
}

class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;
  constructor(private params: Array<[string, Tensor]>,
              private beta1 = 0.9, private beta2 = 0.999, private eps = 1e-8) {
    this.m = params.map(([, p]) => new Float64Array(p.size));
    this.v = params.map(([, p]) => new Float64Array(p.size));
  }

  step(lr: number): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    this.params.forEach(([, p], idx) => {
      if (!p.grad) return;
      const m = this.m[idx];
      const v = this.v[idx];
      for (let i = 0; i < p.size; i++) {
        const g = p.grad[i];
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g * g;
        p.data[i] -= (lr * (m[i] / bc1)) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    });
  }
}

export interface CurvePoint {
  step: number;
  loss: number;
}

export interface TrainResult {
  model: TinyCausalLM;
  tokenizer: CharTokenizer;
  curve: CurvePoint[];
  initialCorpusLoss: number;
  finalCorpusLoss: number;
}

export class DivergenceError extends Error {
  constructor(step: number, loss: number, initial: number) {
    super(`training diverged at step ${step}: loss ${loss.toFixed(4)} ` +
          `exceeds 10x initial ${initial.toFixed(4)}`);
  }
}

export function trainToy(
  examples: TrainingExample[],
  run: ToyRunConfig,
  modelConfig?: Partial<ModelConfig>,
): TrainResult {
  if (examples.length === 0) throw new Error("training corpus is empty");
  const tokenizer = CharTokenizer.fromCorpus(examples);
  const encoded = examples.map((e) => tokenizer.encode(e));
  const maxLen = Math.max(...encoded.map((e) => e.ids.length));
  const model = new TinyCausalLM({
    vocabSize: tokenizer.vocabSize,
    dim: modelConfig?.dim ?? 16,
    layers: modelConfig?.layers ?? 1,
    maxSeqLen: Math.max(maxLen, modelConfig?.maxSeqLen ?? 0),
    seed: modelConfig?.seed ?? run.seed,
  });

  const corpus = makeBatch(encoded);
  const initialCorpusLoss = batchLoss(model, corpus);

  const rng = mulberry32(run.seed ^ 0x5eed);
  let pool: EncodedExample[] = [];
  const nextBatch = (): MaskedBatch => {
    const rows: EncodedExample[] = [];
    while (rows.length < Math.min(run.batchSize, encoded.length)) {
      if (pool.length === 0) {
        pool = [...encoded];
        shuffleInPlace(pool, rng);
      }
      rows.push(pool.pop()!);
    }
    return makeBatch(rows);
  };

  const adam = new Adam(model.parameters());
  const curve: CurvePoint[] = [];
  for (let step = 0; step < run.steps; step++) {
    const batch = nextBatch();
    model.zeroGrads();
    const loss = batchLossBackward(model, batch);
    if (!Number.isFinite(loss) || loss > 10 * initialCorpusLoss) {
      throw new DivergenceError(step, loss, initialCorpusLoss);
    }
    const lr = cosineWithWarmup(step, run.steps, run.learningRate, run.warmupRatio);
    adam.step(lr);
    curve.push({ step, loss });
  }

  const finalCorpusLoss = batchLoss(model, corpus);
  return { model, tokenizer, curve, initialCorpusLoss, finalCorpusLoss };
}

export function writeCurveCsv(path: string, curve: CurvePoint[]): void {
  const lines = ["step,loss", ...curve.map((p) => `${p.step},${p.loss}`)];
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

export function checkpointJson(result: TrainResult, run: ToyRunConfig,
                               original?: TrainConfig): string {
  const params: Record<string, number[]> = {};
  for (const [name, tensor] of result.model.parameters()) {
    params[name] = Array.from(tensor.data);
  }
  return JSON.stringify({
    format: "trainshim-checkpoint-v1",
    model: result.model.config,
    vocab: result.tokenizer.chars.join(""),
    run,
    original_config: original ?? null,
    final_loss: result.finalCorpusLoss,
    params,
  });
}

export function writeCheckpoint(path: string, result: TrainResult,
                                run: ToyRunConfig, original?: TrainConfig): void {
  writeFileSync(path, checkpointJson(result, run, original) + "\n", "utf-8");
}
