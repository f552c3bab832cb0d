/**
 * trainshim CLI.
 *
 *   train       --data train.jsonl --config train_config.json
 *               [--steps N] [--batch-size N] [--lr X] [--seed N]
 *               [--dim N] [--layers N]
 *               [--out-curve curve.csv] [--out-checkpoint ckpt.json]
 *   emit-config --data train.jsonl --config train_config.json --out adapter.json
 *   grad-check  [--seed N] [--epsilon X]
 */
import { readTrainJsonl } from "./data.js";
import { readTrainConfig, writeExternalTrainerConfig } from "./config.js";
import { gradCheck } from "./gradcheck.js";
import { makeBatch } from "./loss.js";
import { TinyCausalLM } from "./model.js";
import { mulberry32 } from "./rng.js";
import { toToyScale, trainToy, writeCheckpoint, writeCurveCsv } from "./train.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got '${argv.slice(i).join(" ")}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

function cmdTrain(flags: Map<string, string>): number {
  const examples = readTrainJsonl(need(flags, "data"));
  const config = readTrainConfig(need(flags, "config"));
  const run = toToyScale(config, {
    steps: flags.has("steps") ? Number(flags.get("steps")) : undefined,
    batchSize: flags.has("batch-size") ? Number(flags.get("batch-size")) : undefined,
    learningRate: flags.has("lr") ? Number(flags.get("lr")) : undefined,
    seed: flags.has("seed") ? Number(flags.get("seed")) : undefined,
  });
  const result = trainToy(examples, run, {
    dim: flags.has("dim") ? Number(flags.get("dim")) : undefined,
    layers: flags.has("layers") ? Number(flags.get("layers")) : undefined,
  });
  if (flags.has("out-curve")) writeCurveCsv(flags.get("out-curve")!, result.curve);
  if (flags.has("out-checkpoint")) {
    writeCheckpoint(flags.get("out-checkpoint")!, result, run, config);
  }
  console.log(JSON.stringify({
    examples: examples.length,
    steps: run.steps,
    parameter_count: result.model.parameterCount(),
    initial_loss: result.initialCorpusLoss,
    final_loss: result.finalCorpusLoss,
  }));
  return 0;
}

function cmdEmitConfig(flags: Map<string, string>): number {
  const examples = readTrainJsonl(need(flags, "data"));
  const config = readTrainConfig(need(flags, "config"));
  writeExternalTrainerConfig(need(flags, "out"), examples, config);
  console.log(JSON.stringify({ conversations: examples.length, out: flags.get("out") }));
  return 0;
}

function cmdGradCheck(flags: Map<string, string>): number {
  const seed = flags.has("seed") ? Number(flags.get("seed")) : 0;
  const epsilon = flags.has("epsilon") ? Number(flags.get("epsilon")) : 1e-4;
  const model = new TinyCausalLM({ vocabSize: 12, dim: 6, layers: 1,
                                   maxSeqLen: 8, seed });
  const rng = mulberry32(seed + 101);
  const rows = [];
  for (let r = 0; r < 2; r++) {
    const len = 6 + Math.floor(rng() * 3);
    const ids = new Int32Array(len);
    ids[0] = 1;
    for (let i = 1; i < len; i++) ids[i] = 2 + Math.floor(rng() * 10);
    const mask = new Uint8Array(len - 1);
    let any = 0;
    for (let i = 0; i < mask.length; i++) {
      mask[i] = rng() < 0.5 ? 1 : 0;
      any += mask[i];
    }
    if (!any) mask[mask.length - 1] = 1;
    rows.push({ ids, mask, supervisedCount: mask.reduce((a, b) => a + b, 0) });
  }
  const result = gradCheck(model, makeBatch(rows), epsilon);
  console.log(JSON.stringify(result));
  return result.maxRelativeError < 1e-3 ? 0 : 1;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "train":
        return cmdTrain(parseFlags(rest));
      case "emit-config":
        return cmdEmitConfig(parseFlags(rest));
      case "grad-check":
        return cmdGradCheck(parseFlags(rest));
      default:
        console.error("usage: trainshim {train|emit-config|grad-check} [--flags]");
        return 1;
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

// Entry point guard so tests can import main without side effects.
const invokedDirectly = process.argv[1]?.endsWith("cli.js") ?? false;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
