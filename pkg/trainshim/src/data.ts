/**
 * train.jsonl reader. This file format is the contract with the upstream
 * dataset tooling: one JSON object per line with sample_id, variant, and a
 * segments array of {text, supervised}; at least one segment is supervised
 * and segment concatenation is the exact model-visible sequence.
 */
import { readFileSync } from "node:fs";

export interface Segment {
  text: string;
  supervised: boolean;
}

export interface TrainingExample {
  sampleId: string;
  variant: string;
  segments: Segment[];
}

export function parseTrainingExample(record: unknown): TrainingExample {
  if (typeof record !== "object" || record === null) {
    throw new Error("training example must be an object");
  }
  const raw = record as Record<string, unknown>;
  for (const key of ["sample_id", "variant", "segments"]) {
    if (!(key in raw)) throw new Error(`training example missing field '${key}'`);
  }
  if (!Array.isArray(raw.segments)) throw new Error("'segments' must be an array");
  const segments: Segment[] = raw.segments.map((seg, i) => {
    const s = seg as Record<string, unknown>;
    if (typeof s.text !== "string") throw new Error(`segment ${i} missing 'text'`);
    if (typeof s.supervised !== "boolean") throw new Error(`segment ${i} missing 'supervised'`);
    return { text: s.text, supervised: s.supervised };
  });
  if (!segments.some((s) => s.supervised)) {
    throw new Error(`example ${String(raw.sample_id)} has no supervised segment`);
  }
  return {
    sampleId: String(raw.sample_id),
    variant: String(raw.variant),
    segments,
  };
}

export function readTrainJsonl(path: string): TrainingExample[] {
  const text = readFileSync(path, "utf-8");
  const examples: TrainingExample[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    examples.push(parseTrainingExample(JSON.parse(line)));
  }
  return examples;
}

export function fullText(example: TrainingExample): string {
  return example.segments.map((s) => s.text).join("");
}

export function supervisedText(example: TrainingExample): string {
  return example.segments.filter((s) => s.supervised).map((s) => s.text).join("");
}
