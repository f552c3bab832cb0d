/**
 * Training-config parsing and the external-trainer adapter emitter.
 *
 * The config JSON is the upstream tooling's emit-config output; its fields
 * carry over untouched into the adapter file, which maps each training
 * example's segments onto a generic chat schema with per-message loss
 * flags: unsupervised segments become user messages (train: false),
 * supervised segments become assistant messages (train: true).
 */
import { readFileSync, writeFileSync } from "node:fs";
import type { TrainingExample } from "./data.js";

export interface TrainConfig {
  learning_rate: number;
  schedule: string;
  warmup_ratio: number;
  global_batch_size: number;
  epochs: number;
  validation_set: string;
}

const CONFIG_FIELDS: Array<keyof TrainConfig> = [
  "learning_rate", "schedule", "warmup_ratio",
  "global_batch_size", "epochs", "validation_set",
];

export const REFERENCE_DEFAULTS: TrainConfig = {
  learning_rate: 5e-6,
  schedule: "cosine_decay",
  warmup_ratio: 0.1,
  global_batch_size: 512,
  epochs: 1,
  validation_set: "MATH500",
};

export function parseTrainConfig(raw: unknown): TrainConfig {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("train config must be a JSON object");
  }
  const record = raw as Record<string, unknown>;
  for (const field of CONFIG_FIELDS) {
    if (!(field in record)) throw new Error(`train config missing field '${field}'`);
  }
  const config: TrainConfig = {
    learning_rate: Number(record.learning_rate),
    schedule: String(record.schedule),
    warmup_ratio: Number(record.warmup_ratio),
    global_batch_size: Number(record.global_batch_size),
    epochs: Number(record.epochs),
    validation_set: String(record.validation_set),
  };
  if (!(config.learning_rate > 0)) throw new Error("learning_rate must be positive");
  if (!(config.global_batch_size > 0)) throw new Error("global_batch_size must be positive");
  if (!(config.warmup_ratio >= 0 && config.warmup_ratio <= 1)) {
    throw new Error("warmup_ratio must be within [0, 1]");
  }
  return config;
}

export function readTrainConfig(path: string): TrainConfig {
  return parseTrainConfig(JSON.parse(readFileSync(path, "utf-8")));
}

export interface AdapterMessage {
  role: "user" | "assistant";
  content: string;
  train: boolean;
}

export interface AdapterConversation {
  id: string;
  variant: string;
  messages: AdapterMessage[];
}

export interface AdapterConfig {
  format: "chat-finetune-v1";
  hyperparameters: TrainConfig;
  conversations: AdapterConversation[];
}

export function emitExternalTrainerConfig(
  examples: TrainingExample[],
  config: TrainConfig,
): AdapterConfig {
  const conversations = examples.map((example) => ({
    id: example.sampleId,
    variant: example.variant,
    messages: example.segments.map((segment): AdapterMessage => ({
      role: segment.supervised ? "assistant" : "user",
      content: segment.text,
      train: segment.supervised,
    })),
  }));
  return {
    format: "chat-finetune-v1",
    hyperparameters: { ...config },
    conversations,
  };
}

export function writeExternalTrainerConfig(
  path: string,
  examples: TrainingExample[],
  config: TrainConfig,
): void {
  const adapter = emitExternalTrainerConfig(examples, config);
  writeFileSync(path, JSON.stringify(adapter, null, 2) + "\n", "utf-8");
}

/** Recover the TrainConfig from an emitted adapter file (round trip). */
export function parseExternalTrainerConfig(raw: unknown): AdapterConfig {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("adapter config must be a JSON object");
  }
  const record = raw as Record<string, unknown>;
  if (record.format !== "chat-finetune-v1") {
    throw new Error(`unknown adapter format ${String(record.format)}`);
  }
  const hyperparameters = parseTrainConfig(record.hyperparameters);
  if (!Array.isArray(record.conversations)) {
    throw new Error("adapter config missing conversations");
  }
  return {
    format: "chat-finetune-v1",
    hyperparameters,
    conversations: record.conversations as AdapterConversation[],
  };
}

export function readExternalTrainerConfig(path: string): AdapterConfig {
  return parseExternalTrainerConfig(JSON.parse(readFileSync(path, "utf-8")));
}
