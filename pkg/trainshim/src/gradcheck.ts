/**
 * Central finite-difference verification of the masked-loss gradients.
 *
 * Checks analytic parameter gradients coordinate by coordinate against
 * (f(θ+ε) − f(θ−ε)) / 2ε. Near-zero pairs fall back to absolute error
 * below 1e-8 so dead directions do not blow up the relative measure.
 */
import { batchLoss, batchLossBackward, MaskedBatch } from "./loss.js";
import { TinyCausalLM } from "./model.js";
import { mulberry32 } from "./rng.js";

export interface GradCheckResult {
  maxRelativeError: number;
  coordinatesChecked: number;
  parameterCount: number;
}

const ABS_FALLBACK = 1e-8;

function relativeError(analytic: number, numeric: number): number {
  const scale = Math.max(Math.abs(analytic), Math.abs(numeric));
  if (scale < ABS_FALLBACK) return Math.abs(analytic - numeric);
  return Math.abs(analytic - numeric) / scale;
}

/**
 * Verify up to `maxCoords` parameter coordinates (all of them when the
 * model is small enough); returns the worst relative error observed.
 */
export function gradCheck(
  model: TinyCausalLM,
  batch: MaskedBatch,
  epsilon = 1e-4,
  maxCoords = Infinity,
  sampleSeed = 0,
): GradCheckResult {
  const params = model.parameters();
  const parameterCount = params.reduce((acc, [, p]) => acc + p.size, 0);
  if (parameterCount > 10_000) {
    throw new Error(`gradCheck expects a small model (<= 1e4 params), got ${parameterCount}`);
  }

  model.zeroGrads();
  batchLossBackward(model, batch);

  const coords: Array<[number, number]> = [];
  for (let pi = 0; pi < params.length; pi++) {
    for (let i = 0; i < params[pi][1].size; i++) coords.push([pi, i]);
  }
  let selected = coords;
  if (coords.length > maxCoords) {
    const rng = mulberry32(sampleSeed);
    selected = [];
    const taken = new Set<number>();
    while (selected.length < maxCoords) {
      const pick = Math.floor(rng() * coords.length);
      if (!taken.has(pick)) {
        taken.add(pick);
        selected.push(coords[pick]);
      }
    }
  }

  let worst = 0;
  for (const [pi, i] of selected) {
    const tensor = params[pi][1];
    const analytic = tensor.grad ? tensor.grad[i] : 0;
    const saved = tensor.data[i];
    tensor.data[i] = saved + epsilon;
    const plus = batchLoss(model, batch);
    tensor.data[i] = saved - epsilon;
    const minus = batchLoss(model, batch);
    tensor.data[i] = saved;
    const numeric = (plus - minus) / (2 * epsilon);
    worst = Math.max(worst, relativeError(analytic, numeric));
  }
  return {
    maxRelativeError: worst,
    coordinatesChecked: selected.length,
    parameterCount,
  };
}
