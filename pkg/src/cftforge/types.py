"""Shared domain types, identity hashing, and JSONL serialization.

Every record type is an immutable value object with ``to_dict``/``from_dict``
converters targeting the documented JSONL schemas (one JSON object per line,
UTF-8, LF line endings). Deserialization raises :class:`SchemaError` naming
the offending field for missing keys and unknown enum tags, and
:class:`ValidationError` for invariant violations.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from .errors import SchemaError, ValidationError

# Well-known corpus source names. ``source`` is an open set: any other
# nonempty string is treated as a custom source name.
WEBINSTRUCT = "WebInstruct"
METAMATHQA = "MetaMathQA"
NUMINAMATH = "NuminaMath"
SELF_GENERATED = "SelfGenerated"
KNOWN_SOURCES = (WEBINSTRUCT, METAMATHQA, NUMINAMATH, SELF_GENERATED)


class Judgment(Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    UNKNOWN = "unknown"


class Variant(Enum):
    SFT = "sft"
    VERIFIED_SFT = "verified_sft"
    TEACHER_SFT = "teacher_sft"
    CFT = "cft"
    CFT_SHORT = "cft_short"


class Benchmark(Enum):
    # Declaration order is the canonical column order for rendered tables.
    MATH = "MATH"
    MINERVA_MATH = "Minerva-Math"
    GSM8K = "GSM8K"
    OLYMPIAD_BENCH = "OlympiadBench"
    AIME24 = "AIME24"
    AMC23 = "AMC23"
    MATH500 = "MATH500"
    THEOREMQA = "TheoremQA"
    MMLU_PRO = "MMLU-Pro"
    GPQA = "GPQA"


class StrategyKind(Enum):
    DIRECT = "direct"
    SINGLE_PASS = "single-pass"
    TWO_STAGE = "two-stage"


class Schedule(Enum):
    COSINE_DECAY = "cosine_decay"


def _parse_enum(enum_cls: type, value: Any, field_name: str) -> Any:
    for member in enum_cls:
        if member.value == value:
            return member
    raise SchemaError(field_name, f"unknown tag {value!r}")


def _require(record: Mapping[str, Any], key: str) -> Any:
    if key not in record:
        raise SchemaError(key, "missing required field")
    return record[key]


def utc_now_iso() -> str:
    """Current UTC time as ISO-8601 with second precision and Z suffix."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def approx_token_len(text: str) -> int:
    """Whitespace-token proxy length used for corpus-level length filters."""
    return len(text.split())


def sample_id(question: str, response: str, source: str) -> str:
    """Deterministic content hash identifying a (question, response, source) triple.

    Stable across runs and platforms; lowercase hex.
    """
    if not question or not question.strip():
        raise ValidationError("question must be nonempty")
    payload = json.dumps([question, response, source], ensure_ascii=False,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Sample:
    """One instruction/response pair with source metadata."""

    id: str
    question: str
    response: str
    source: str
    subject: str | None = None
    approx_token_len: int = 0

    def __post_init__(self) -> None:
        if not self.question or not self.question.strip():
            raise ValidationError("Sample.question must be nonempty")
        if not self.source:
            raise ValidationError("Sample.source must be nonempty")
        if self.approx_token_len < 0:
            raise ValidationError("Sample.approx_token_len must be nonnegative")

    @classmethod
    def create(cls, question: str, response: str, source: str,
               subject: str | None = None) -> "Sample":
        return cls(
            id=sample_id(question, response, source),
            question=question,
            response=response,
            source=source,
            subject=subject,
            approx_token_len=approx_token_len(question) + approx_token_len(response),
        )

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "question": self.question,
            "response": self.response,
            "source": self.source,
        }
        if self.subject is not None:
            d["subject"] = self.subject
        d["approx_token_len"] = self.approx_token_len
        return d

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "Sample":
        return cls(
            id=_require(record, "id"),
            question=_require(record, "question"),
            response=_require(record, "response"),
            source=_require(record, "source"),
            subject=record.get("subject"),
            approx_token_len=_require(record, "approx_token_len"),
        )


@dataclass(frozen=True)
class CritiqueRecord:
    """A teacher critique plus its parsed verdict.

    ``judgment`` is a cached value derived from ``critique_text``; the parser
    is the source of truth and the parse-critiques command rewrites stale
    caches in place.
    """

    sample_id: str
    teacher_model: str
    prompt_fingerprint: str
    critique_text: str
    judgment: Judgment
    created_at: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "teacher_model": self.teacher_model,
            "prompt_fingerprint": self.prompt_fingerprint,
            "critique_text": self.critique_text,
            "judgment": self.judgment.value,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "CritiqueRecord":
        return cls(
            sample_id=_require(record, "sample_id"),
            teacher_model=_require(record, "teacher_model"),
            prompt_fingerprint=_require(record, "prompt_fingerprint"),
            critique_text=_require(record, "critique_text"),
            judgment=_parse_enum(Judgment, _require(record, "judgment"), "judgment"),
            created_at=_require(record, "created_at"),
        )


@dataclass(frozen=True)
class Segment:
    text: str
    supervised: bool

    def to_dict(self) -> dict:
        return {"text": self.text, "supervised": self.supervised}

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "Segment":
        supervised = _require(record, "supervised")
        if not isinstance(supervised, bool):
            raise SchemaError("supervised", "must be a boolean")
        return cls(text=_require(record, "text"), supervised=supervised)


@dataclass(frozen=True)
class TrainingExample:
    """Segmented text with per-segment supervision flags.

    Concatenating the segment texts yields the exact model-visible sequence;
    there are no hidden separators. At least one segment is supervised.
    """

    sample_id: str
    variant: Variant
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not any(seg.supervised for seg in self.segments):
            raise ValidationError(
                "TrainingExample requires at least one supervised segment")

    @property
    def full_text(self) -> str:
        return "".join(seg.text for seg in self.segments)

    @property
    def supervised_text(self) -> str:
        return "".join(seg.text for seg in self.segments if seg.supervised)

    @property
    def unsupervised_text(self) -> str:
        return "".join(seg.text for seg in self.segments if not seg.supervised)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "variant": self.variant.value,
            "segments": [seg.to_dict() for seg in self.segments],
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "TrainingExample":
        segments = _require(record, "segments")
        if not isinstance(segments, list):
            raise SchemaError("segments", "must be a list")
        return cls(
            sample_id=_require(record, "sample_id"),
            variant=_parse_enum(Variant, _require(record, "variant"), "variant"),
            segments=tuple(Segment.from_dict(seg) for seg in segments),
        )


@dataclass(frozen=True)
class BenchmarkItem:
    id: str
    benchmark: Benchmark
    question: str
    gold_answer: str

    def __post_init__(self) -> None:
        if not self.gold_answer:
            raise ValidationError("BenchmarkItem.gold_answer must be nonempty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "benchmark": self.benchmark.value,
            "question": self.question,
            "gold_answer": self.gold_answer,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "BenchmarkItem":
        return cls(
            id=_require(record, "id"),
            benchmark=_parse_enum(Benchmark, _require(record, "benchmark"), "benchmark"),
            question=_require(record, "question"),
            gold_answer=_require(record, "gold_answer"),
        )


@dataclass(frozen=True)
class InferenceStrategy:
    """How a model is driven over a benchmark item.

    ``max_iterations`` is meaningful only for the two-stage kind. Direct
    inference defaults to greedy temperature 0.0.
    """

    kind: StrategyKind
    temperature: float = 0.0
    max_iterations: int = 8

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError("temperature must be within [0, 2]")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "temperature": self.temperature,
            "max_iterations": self.max_iterations,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "InferenceStrategy":
        return cls(
            kind=_parse_enum(StrategyKind, _require(record, "kind"), "kind"),
            temperature=_require(record, "temperature"),
            max_iterations=_require(record, "max_iterations"),
        )


@dataclass(frozen=True)
class EvalRecord:
    """One model attempt at a benchmark item with extraction and verdict.

    ``iterations_used`` and ``error`` are optional provenance fields written
    only when present (two-stage runs and failed transport respectively).
    """

    item_id: str
    benchmark: Benchmark
    strategy: InferenceStrategy
    model: str
    raw_output: str
    extracted_answer: str | None
    verdict: bool
    num_model_calls: int
    iterations_used: int | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if self.verdict and self.extracted_answer is None:
            raise ValidationError("verdict=true requires an extracted answer")
        if self.num_model_calls < 1:
            raise ValidationError("num_model_calls must be positive")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "item_id": self.item_id,
            "benchmark": self.benchmark.value,
            "strategy": self.strategy.to_dict(),
            "model": self.model,
            "raw_output": self.raw_output,
        }
        if self.extracted_answer is not None:
            d["extracted_answer"] = self.extracted_answer
        d["verdict"] = self.verdict
        d["num_model_calls"] = self.num_model_calls
        if self.iterations_used is not None:
            d["iterations_used"] = self.iterations_used
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "EvalRecord":
        strategy = _require(record, "strategy")
        if not isinstance(strategy, Mapping):
            raise SchemaError("strategy", "must be an object")
        return cls(
            item_id=_require(record, "item_id"),
            benchmark=_parse_enum(Benchmark, _require(record, "benchmark"), "benchmark"),
            strategy=InferenceStrategy.from_dict(strategy),
            model=_require(record, "model"),
            raw_output=_require(record, "raw_output"),
            extracted_answer=record.get("extracted_answer"),
            verdict=_require(record, "verdict"),
            num_model_calls=_require(record, "num_model_calls"),
            iterations_used=record.get("iterations_used"),
            error=record.get("error"),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults are the reference recipe."""

    learning_rate: float = 5e-6
    schedule: Schedule = Schedule.COSINE_DECAY
    warmup_ratio: float = 0.1
    global_batch_size: int = 512
    epochs: int = 1
    validation_set: Benchmark = Benchmark.MATH500

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.global_batch_size <= 0:
            raise ValidationError("global_batch_size must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be positive")
        if not 0.0 <= self.warmup_ratio <= 1.0:
            raise ValidationError("warmup_ratio must be within [0, 1]")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "schedule": self.schedule.value,
            "warmup_ratio": self.warmup_ratio,
            "global_batch_size": self.global_batch_size,
            "epochs": self.epochs,
            "validation_set": self.validation_set.value,
        }

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "TrainConfig":
        return cls(
            learning_rate=_require(record, "learning_rate"),
            schedule=_parse_enum(Schedule, _require(record, "schedule"), "schedule"),
            warmup_ratio=_require(record, "warmup_ratio"),
            global_batch_size=_require(record, "global_batch_size"),
            epochs=_require(record, "epochs"),
            validation_set=_parse_enum(
                Benchmark, _require(record, "validation_set"), "validation_set"),
        )


@dataclass(frozen=True)
class ScoreRow:
    label: str
    scores: dict[Benchmark, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"label": self.label,
                "scores": {b.value: v for b, v in self.scores.items()}}

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "ScoreRow":
        raw = _require(record, "scores")
        if not isinstance(raw, Mapping):
            raise SchemaError("scores", "must be an object")
        scores = {_parse_enum(Benchmark, k, "scores"): float(v)
                  for k, v in raw.items()}
        return cls(label=_require(record, "label"), scores=scores)


@dataclass(frozen=True)
class ScoreTable:
    """Model x benchmark accuracy grid; all rows cover the same columns."""

    rows: tuple[ScoreRow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.rows:
            columns = set(self.rows[0].scores)
            for row in self.rows[1:]:
                if set(row.scores) != columns:
                    raise ValidationError(
                        f"row '{row.label}' does not cover the shared benchmark columns")

    @property
    def benchmarks(self) -> list[Benchmark]:
        if not self.rows:
            return []
        present = set(self.rows[0].scores)
        return [b for b in Benchmark if b in present]

    def row(self, label: str) -> ScoreRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise ValidationError(f"no row labelled '{label}'")

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> "ScoreTable":
        rows = _require(record, "rows")
        if not isinstance(rows, list):
            raise SchemaError("rows", "must be a list")
        return cls(rows=tuple(ScoreRow.from_dict(r) for r in rows))


# --- JSONL I/O -------------------------------------------------------------

def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> int:
    """Write one JSON object per line (UTF-8, LF); returns the line count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_samples(path: str | Path) -> list[Sample]:
    return [Sample.from_dict(r) for r in read_jsonl(path)]


def save_samples(path: str | Path, samples: Iterable[Sample]) -> int:
    return write_jsonl(path, (s.to_dict() for s in samples))


def load_critiques(path: str | Path) -> list[CritiqueRecord]:
    return [CritiqueRecord.from_dict(r) for r in read_jsonl(path)]


def save_critiques(path: str | Path, records: Iterable[CritiqueRecord]) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))


def load_training_examples(path: str | Path) -> list[TrainingExample]:
    return [TrainingExample.from_dict(r) for r in read_jsonl(path)]


def save_training_examples(path: str | Path,
                           examples: Iterable[TrainingExample]) -> int:
    return write_jsonl(path, (e.to_dict() for e in examples))


def load_items(path: str | Path) -> list[BenchmarkItem]:
    return [BenchmarkItem.from_dict(r) for r in read_jsonl(path)]


def save_items(path: str | Path, items: Iterable[BenchmarkItem]) -> int:
    return write_jsonl(path, (i.to_dict() for i in items))


def load_eval_records(path: str | Path) -> list[EvalRecord]:
    return [EvalRecord.from_dict(r) for r in read_jsonl(path)]


def save_eval_records(path: str | Path, records: Iterable[EvalRecord]) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))
