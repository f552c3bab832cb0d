/**
 * Tiny decoder-only causal language model: token + position embeddings,
 * a stack of pre-norm single-head causal attention + tanh MLP blocks with
 * residual connections, and an untied output head. Small enough for
 * exhaustive finite-difference checking, causal by construction via the
 * masked softmax.
 */
import { gauss, mulberry32 } from "./rng.js";
import {
  Tensor,
  add,
  addRow,
  backward,
  causalSoftmax,
  embedding,
  maskedCrossEntropy,
  matmul,
  matmulBT,
  param,
  rmsnorm,
  scale,
  tanh,
} from "./tensor.js";

export interface ModelConfig {
  vocabSize: number;
  dim: number;
  layers: number;
  maxSeqLen: number;
  seed: number;
}

interface Block {
  normAttn: Tensor;
  wq: Tensor;
  wk: Tensor;
  wv: Tensor;
  wo: Tensor;
  normMlp: Tensor;
  w1: Tensor;
  b1: Tensor;
  w2: Tensor;
  b2: Tensor;
}

export class TinyCausalLM {
  readonly config: ModelConfig;
  tokEmb: Tensor;
  posEmb: Tensor;
  blocks: Block[] = [];
  normOut: Tensor;
  head: Tensor;
  private posIds: Int32Array;

  constructor(config: ModelConfig) {
    this.config = config;
    const rng = mulberry32(config.seed);
    const std = 0.08;
    const init = () => gauss(rng, 0, std);
    const ones = () => 1;
    const { vocabSize: v, dim: d, maxSeqLen } = config;
    this.tokEmb = param(v, d, init);
    this.posEmb = param(maxSeqLen, d, init);
    for (let l = 0; l < config.layers; l++) {
      this.blocks.push({
        normAttn: param(1, d, ones),
        wq: param(d, d, init),
        wk: param(d, d, init),
        wv: param(d, d, init),
        wo: param(d, d, init),
        normMlp: param(1, d, ones),
        w1: param(d, 2 * d, init),
        b1: param(1, 2 * d, () => 0),
        w2: param(2 * d, d, init),
        b2: param(1, d, () => 0),
      });
    }
    this.normOut = param(1, d, ones);
    this.head = param(d, v, init);
    this.posIds = new Int32Array(maxSeqLen);
    for (let i = 0; i < maxSeqLen; i++) this.posIds[i] = i;
  }

  parameters(): Array<[string, Tensor]> {
    const out: Array<[string, Tensor]> = [
      ["tok_emb", this.tokEmb],
      ["pos_emb", this.posEmb],
    ];
    this.blocks.forEach((b, l) => {
      out.push(
        [`block${l}.norm_attn`, b.normAttn],
        [`block${l}.wq`, b.wq],
        [`block${l}.wk`, b.wk],
        [`block${l}.wv`, b.wv],
        [`block${l}.wo`, b.wo],
        [`block${l}.norm_mlp`, b.normMlp],
        [`block${l}.w1`, b.w1],
        [`block${l}.b1`, b.b1],
        [`block${l}.w2`, b.w2],
        [`block${l}.b2`, b.b2],
      );
    });
    out.push(["norm_out", this.normOut], ["head", this.head]);
    return out;
  }

  parameterCount(): number {
    return this.parameters().reduce((acc, [, t]) => acc + t.size, 0);
  }

  zeroGrads(): void {
    for (const [, t] of this.parameters()) {
      if (t.grad) t.grad.fill(0);
    }
  }

  /** Logits [T, vocab]; position t depends only on tokens <= t. */
  forward(ids: Int32Array): Tensor {
    const T = ids.length;
    if (T === 0 || T > this.config.maxSeqLen) {
      throw new Error(`sequence length ${T} outside (0, ${this.config.maxSeqLen}]`);
    }
    let x = add(embedding(this.tokEmb, ids),
                embedding(this.posEmb, this.posIds.subarray(0, T)));
    const invSqrtD = 1 / Math.sqrt(this.config.dim);
    for (const b of this.blocks) {
      const h = rmsnorm(x, b.normAttn);
      const q = matmul(h, b.wq);
      const k = matmul(h, b.wk);
      const v = matmul(h, b.wv);
      const att = causalSoftmax(scale(matmulBT(q, k), invSqrtD));
      x = add(x, matmul(matmul(att, v), b.wo));
      const m = rmsnorm(x, b.normMlp);
      const hidden = tanh(addRow(matmul(m, b.w1), b.b1));
      x = add(x, addRow(matmul(hidden, b.w2), b.b2));
    }
    return matmul(rmsnorm(x, this.normOut), this.head);
  }

  /** Masked training loss for one sequence (inputs ids[:-1], targets ids[1:]). */
  sequenceLoss(ids: Int32Array, targetMask: Uint8Array): Tensor {
    if (targetMask.length !== ids.length - 1) {
      throw new Error("mask must align with target positions (ids.length - 1)");
    }
    const logits = this.forward(ids.subarray(0, ids.length - 1));
    return maskedCrossEntropy(logits, ids.subarray(1), targetMask);
  }
}

export { backward };
