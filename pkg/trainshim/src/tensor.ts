/**
 * Minimal reverse-mode autodiff over 2D float64 tensors.
 *
 * Each op builds the output eagerly and records a backward closure; calling
 * `backward(loss)` topologically sorts the graph and accumulates gradients
 * into `grad` buffers. Only the ops a tiny decoder-only LM needs exist here.
 */

export class Tensor {
  data: Float64Array;
  grad: Float64Array | null = null;
  readonly rows: number;
  readonly cols: number;
  requiresGrad: boolean;
  parents: Tensor[] = [];
  backwardFn: (() => void) | null = null;

  constructor(rows: number, cols: number, data?: Float64Array, requiresGrad = false) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    if (data && data.length !== rows * cols) {
      throw new Error(`shape mismatch: ${rows}x${cols} vs ${data.length}`);
    }
    this.requiresGrad = requiresGrad;
  }

  get size(): number {
    return this.rows * this.cols;
  }

  ensureGrad(): Float64Array {
    if (!this.grad) this.grad = new Float64Array(this.size);
    return this.grad;
  }

  at(r: number, c: number): number {
    return this.data[r * this.cols + c];
  }
}

export function param(rows: number, cols: number, init: (i: number) => number): Tensor {
  const t = new Tensor(rows, cols, undefined, true);
  for (let i = 0; i < t.size; i++) t.data[i] = init(i);
  return t;
}

function track(out: Tensor, parents: Tensor[], backwardFn: () => void): Tensor {
  out.parents = parents;
  out.requiresGrad = parents.some((p) => p.requiresGrad);
  if (out.requiresGrad) out.backwardFn = backwardFn;
  return out;
}

/** C = A @ B with A [m,k], B [k,n]. */
export function matmul(a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.rows) throw new Error(`matmul: ${a.cols} vs ${b.rows}`);
  const m = a.rows, k = a.cols, n = b.cols;
  const out = new Tensor(m, n);
  for (let i = 0; i < m; i++) {
    for (let p = 0; p < k; p++) {
      const av = a.data[i * k + p];
      if (av === 0) continue;
      for (let j = 0; j < n; j++) {
        out.data[i * n + j] += av * b.data[p * n + j];
      }
    }
  }
  return track(out, [a, b], () => {
    const dOut = out.grad!;
    if (a.requiresGrad) {
      const da = a.ensureGrad();
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          const g = dOut[i * n + j];
          if (g === 0) continue;
          for (let p = 0; p < k; p++) da[i * k + p] += g * b.data[p * n + j];
        }
      }
    }
    if (b.requiresGrad) {
      const db = b.ensureGrad();
      for (let i = 0; i < m; i++) {
        for (let p = 0; p < k; p++) {
          const av = a.data[i * k + p];
          if (av === 0) continue;
          for (let j = 0; j < n; j++) db[p * n + j] += av * dOut[i * n + j];
        }
      }
    }
  });
}

/** C = A @ B^T with A [m,k], B [n,k]. */
export function matmulBT(a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.cols) throw new Error(`matmulBT: ${a.cols} vs ${b.cols}`);
  const m = a.rows, k = a.cols, n = b.rows;
  const out = new Tensor(m, n);
  for (let i = 0; i < m; i++) {
    for (let j = 0; j < n; j++) {
      let acc = 0;
      for (let p = 0; p < k; p++) acc += a.data[i * k + p] * b.data[j * k + p];
      out.data[i * n + j] = acc;
    }
  }
  return track(out, [a, b], () => {
    const dOut = out.grad!;
    if (a.requiresGrad) {
      const da = a.ensureGrad();
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          const g = dOut[i * n + j];
          if (g === 0) continue;
          for (let p = 0; p < k; p++) da[i * k + p] += g * b.data[j * k + p];
        }
      }
    }
    if (b.requiresGrad) {
      const db = b.ensureGrad();
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          const g = dOut[i * n + j];
          if (g === 0) continue;
          for (let p = 0; p < k; p++) db[j * k + p] += g * a.data[i * k + p];
        }
      }
    }
  });
}

/** Elementwise sum of same-shape tensors (residual connections). */
export function add(a: Tensor, b: Tensor): Tensor {
  if (a.rows !== b.rows || a.cols !== b.cols) throw new Error("add: shape mismatch");
  const out = new Tensor(a.rows, a.cols);
  for (let i = 0; i < out.size; i++) out.data[i] = a.data[i] + b.data[i];
  return track(out, [a, b], () => {
    const dOut = out.grad!;
    if (a.requiresGrad) {
      const da = a.ensureGrad();
      for (let i = 0; i < out.size; i++) da[i] += dOut[i];
    }
    if (b.requiresGrad) {
      const db = b.ensureGrad();
      for (let i = 0; i < out.size; i++) db[i] += dOut[i];
    }
  });
}

/** Broadcast a [1,n] bias over the rows of x [m,n]. */
export function addRow(x: Tensor, bias: Tensor): Tensor {
  if (bias.rows !== 1 || bias.cols !== x.cols) throw new Error("addRow: shape mismatch");
  const out = new Tensor(x.rows, x.cols);
  for (let i = 0; i < x.rows; i++) {
    for (let j = 0; j < x.cols; j++) {
      out.data[i * x.cols + j] = x.data[i * x.cols + j] + bias.data[j];
    }
  }
  return track(out, [x, bias], () => {
    const dOut = out.grad!;
    if (x.requiresGrad) {
      const dx = x.ensureGrad();
      for (let i = 0; i < out.size; i++) dx[i] += dOut[i];
    }
    if (bias.requiresGrad) {
      const db = bias.ensureGrad();
      for (let i = 0; i < x.rows; i++) {
        for (let j = 0; j < x.cols; j++) db[j] += dOut[i * x.cols + j];
      }
    }
  });
}

export function scale(x: Tensor, factor: number): Tensor {
  const out = new Tensor(x.rows, x.cols);
  for (let i = 0; i < x.size; i++) out.data[i] = x.data[i] * factor;
  return track(out, [x], () => {
    if (!x.requiresGrad) return;
    const dx = x.ensureGrad();
    const dOut = out.grad!;
    for (let i = 0; i < x.size; i++) dx[i] += dOut[i] * factor;
  });
}

/** Smooth activation; keeps finite-difference checks well conditioned. */
export function tanh(x: Tensor): Tensor {
  const out = new Tensor(x.rows, x.cols);
  for (let i = 0; i < x.size; i++) out.data[i] = Math.tanh(x.data[i]);
  return track(out, [x], () => {
    if (!x.requiresGrad) return;
    const dx = x.ensureGrad();
    const dOut = out.grad!;
    for (let i = 0; i < x.size; i++) dx[i] += dOut[i] * (1 - out.data[i] * out.data[i]);
  });
}

const RMS_EPS = 1e-5;

/** Row-wise RMS normalization with a learned gain [1,n]. */
export function rmsnorm(x: Tensor, gain: Tensor): Tensor {
  if (gain.rows !== 1 || gain.cols !== x.cols) throw new Error("rmsnorm: shape mismatch");
  const n = x.cols;
  const out = new Tensor(x.rows, n);
  const inv = new Float64Array(x.rows);
  for (let i = 0; i < x.rows; i++) {
    let ss = 0;
    for (let j = 0; j < n; j++) {
      const v = x.data[i * n + j];
      ss += v * v;
    }
    const r = 1 / Math.sqrt(ss / n + RMS_EPS);
    inv[i] = r;
    for (let j = 0; j < n; j++) {
      out.data[i * n + j] = x.data[i * n + j] * r * gain.data[j];
    }
  }
  return track(out, [x, gain], () => {
    const dOut = out.grad!;
    for (let i = 0; i < x.rows; i++) {
      const r = inv[i];
      if (gain.requiresGrad) {
        const dg = gain.ensureGrad();
        for (let j = 0; j < n; j++) {
          dg[j] += dOut[i * n + j] * x.data[i * n + j] * r;
        }
      }
      if (x.requiresGrad) {
        const dx = x.ensureGrad();
        let s = 0;
        for (let j = 0; j < n; j++) {
          s += dOut[i * n + j] * gain.data[j] * x.data[i * n + j];
        }
        const c = (s * r * r * r) / n;
        for (let j = 0; j < n; j++) {
          dx[i * n + j] += dOut[i * n + j] * gain.data[j] * r - x.data[i * n + j] * c;
        }
      }
    }
  });
}

/** Gather rows of an embedding table; gradient scatter-adds back. */
export function embedding(table: Tensor, ids: Int32Array): Tensor {
  const d = table.cols;
  const out = new Tensor(ids.length, d);
  for (let t = 0; t < ids.length; t++) {
    const row = ids[t];
    if (row < 0 || row >= table.rows) throw new Error(`embedding id ${row} out of range`);
    out.data.set(table.data.subarray(row * d, row * d + d), t * d);
  }
  return track(out, [table], () => {
    if (!table.requiresGrad) return;
    const dT = table.ensureGrad();
    const dOut = out.grad!;
    for (let t = 0; t < ids.length; t++) {
      const row = ids[t];
      for (let j = 0; j < d; j++) dT[row * d + j] += dOut[t * d + j];
    }
  });
}

/**
 * Row-wise softmax over a square score matrix restricted to j <= i.
 * Entries above the diagonal are exactly zero: position i never attends
 * to any later position, which is what makes the model causal.
 */
export function causalSoftmax(scores: Tensor): Tensor {
  if (scores.rows !== scores.cols) throw new Error("causalSoftmax: square input required");
  const n = scores.rows;
  const out = new Tensor(n, n);
  for (let i = 0; i < n; i++) {
    let max = -Infinity;
    for (let j = 0; j <= i; j++) max = Math.max(max, scores.data[i * n + j]);
    let z = 0;
    for (let j = 0; j <= i; j++) {
      const e = Math.exp(scores.data[i * n + j] - max);
      out.data[i * n + j] = e;
      z += e;
    }
    for (let j = 0; j <= i; j++) out.data[i * n + j] /= z;
  }
  return track(out, [scores], () => {
    if (!scores.requiresGrad) return;
    const ds = scores.ensureGrad();
    const dOut = out.grad!;
    for (let i = 0; i < n; i++) {
      let dot = 0;
      for (let j = 0; j <= i; j++) dot += dOut[i * n + j] * out.data[i * n + j];
      for (let j = 0; j <= i; j++) {
        ds[i * n + j] += out.data[i * n + j] * (dOut[i * n + j] - dot);
      }
    }
  });
}

/**
 * Mean negative log-likelihood over mask-true target positions only.
 *
 * Mask-false rows are never touched by either pass, so their logit
 * gradients are identically zero and they are excluded from the mean's
 * denominator (the mean runs over supervised positions).
 */
export function maskedCrossEntropy(
  logits: Tensor,
  targets: Int32Array,
  mask: Uint8Array,
): Tensor {
  if (targets.length !== logits.rows || mask.length !== logits.rows) {
    throw new Error("maskedCrossEntropy: targets/mask must align with logit rows");
  }
  let count = 0;
  for (let i = 0; i < mask.length; i++) if (mask[i]) count++;
  if (count === 0) throw new Error("maskedCrossEntropy: mask selects no positions");
  const v = logits.cols;
  const out = new Tensor(1, 1);
  let total = 0;
  for (let i = 0; i < logits.rows; i++) {
    if (!mask[i]) continue;
    let max = -Infinity;
    for (let j = 0; j < v; j++) max = Math.max(max, logits.data[i * v + j]);
    let z = 0;
    for (let j = 0; j < v; j++) z += Math.exp(logits.data[i * v + j] - max);
    total += max + Math.log(z) - logits.data[i * v + targets[i]];
  }
  out.data[0] = total / count;
  return track(out, [logits], () => {
    if (!logits.requiresGrad) return;
    const dl = logits.ensureGrad();
    const g = out.grad![0] / count;
    for (let i = 0; i < logits.rows; i++) {
      if (!mask[i]) continue;
      let max = -Infinity;
      for (let j = 0; j < v; j++) max = Math.max(max, logits.data[i * v + j]);
      let z = 0;
      for (let j = 0; j < v; j++) z += Math.exp(logits.data[i * v + j] - max);
      for (let j = 0; j < v; j++) {
        const p = Math.exp(logits.data[i * v + j] - max) / z;
        dl[i * v + j] += g * (p - (j === targets[i] ? 1 : 0));
      }
    }
  });
}

/**
 * Reverse-topological gradient accumulation from a scalar loss.
 *
 * `seed` scales the whole gradient; batch code uses it to weight each
 * sequence's contribution by its share of supervised positions.
 */
export function backward(loss: Tensor, seed = 1): void {
  if (loss.size !== 1) throw new Error("backward: loss must be scalar");
  const order: Tensor[] = [];
  const seen = new Set<Tensor>();
  const visit = (t: Tensor) => {
    if (seen.has(t) || !t.requiresGrad) return;
    seen.add(t);
    for (const p of t.parents) visit(p);
    order.push(t);
  };
  visit(loss);
  loss.ensureGrad()[0] = seed;
  for (let i = order.length - 1; i >= 0; i--) {
    order[i].backwardFn?.();
  }
}
