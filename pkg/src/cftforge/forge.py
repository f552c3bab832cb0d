"""Builders for the training dataset variants and their ablations.

Every builder is a pure function over in-memory collections, deterministic
given (inputs, seed), and returns a :class:`BuildReport` carrying the
examples plus exclusion counters for the sidecar manifest. Scraped corpora
contain empty or whitespace-only responses; builders skip them with a
counter rather than aborting a 50K-record run.

The supervised region never includes any prompt text: prompts occupy an
unsupervised leading segment that ends with an explicit "\\n\\n" separator,
so segment concatenation is the exact model-visible sequence.
"""
from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from . import prompts
from .client import ChatRequest, TeacherClient
from .critique import judgment_stats
from .errors import ValidationError
from .types import (
    CritiqueRecord,
    Judgment,
    Sample,
    Segment,
    TrainConfig,
    TrainingExample,
    Variant,
    approx_token_len,
    SELF_GENERATED,
)

PROMPT_SEPARATOR = "\n\n"


@dataclass
class BuildReport:
    """Examples plus the exclusion accounting required by sidecar metadata."""

    examples: list[TrainingExample] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    correct_rate: float | None = None

    def bump(self, key: str, by: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + by


def _prompt_segment(text: str) -> Segment:
    return Segment(text + PROMPT_SEPARATOR, supervised=False)


def _index_critiques(critiques: Iterable[CritiqueRecord]) -> dict[str, CritiqueRecord]:
    # First record per sample wins, matching dedup elsewhere.
    index: dict[str, CritiqueRecord] = {}
    for record in critiques:
        index.setdefault(record.sample_id, record)
    return index


def build_sft(samples: Sequence[Sample]) -> BuildReport:
    """One example per sample: direct-inference prompt, response supervised."""
    report = BuildReport()
    report.bump("input", len(samples))
    for sample in samples:
        if not sample.response.strip():
            report.bump("skipped_empty_response")
            continue
        report.examples.append(TrainingExample(
            sample_id=sample.id,
            variant=Variant.SFT,
            segments=(
                _prompt_segment(prompts.render(prompts.PromptKind.DIRECT_INFERENCE,
                                               sample.question)),
                Segment(sample.response, supervised=True),
            ),
        ))
    report.bump("emitted", len(report.examples))
    return report


def build_verified_sft(samples: Sequence[Sample],
                       critiques: Iterable[CritiqueRecord],
                       size_cap: int | None = None) -> BuildReport:
    """SFT restricted to responses the teacher judged correct.

    Keeps corpus order and truncates to ``size_cap``; the selection rule is
    filter-then-slice, recorded in the sidecar so runs stay reproducible.
    """
    if size_cap is not None and size_cap < 1:
        raise ValidationError("size_cap must be positive")
    index = _index_critiques(critiques)
    report = BuildReport()
    report.bump("input", len(samples))
    used: list[CritiqueRecord] = []
    for sample in samples:
        if not sample.response.strip():
            report.bump("skipped_empty_response")
            continue
        record = index.get(sample.id)
        if record is None:
            report.bump("missing_critique")
            continue
        used.append(record)
        if record.judgment is not Judgment.CORRECT:
            report.bump("not_judged_correct")
            continue
        if size_cap is not None and len(report.examples) >= size_cap:
            report.bump("over_size_cap")
            continue
        report.examples.append(TrainingExample(
            sample_id=sample.id,
            variant=Variant.VERIFIED_SFT,
            segments=(
                _prompt_segment(prompts.render(prompts.PromptKind.DIRECT_INFERENCE,
                                               sample.question)),
                Segment(sample.response, supervised=True),
            ),
        ))
    report.correct_rate = judgment_stats(used).correct_rate
    report.bump("emitted", len(report.examples))
    return report


def build_teacher_sft(samples: Sequence[Sample],
                      teacher_answers: Mapping[str, str]) -> BuildReport:
    """SFT on teacher-generated answers in place of the original responses."""
    report = BuildReport()
    report.bump("input", len(samples))
    seen: set[str] = set()
    for sample in samples:
        if sample.id in seen:
            report.bump("duplicate_id")
            continue
        seen.add(sample.id)
        answer = teacher_answers.get(sample.id)
        if answer is None:
            report.bump("missing_teacher_answer")
            continue
        if not answer.strip():
            report.bump("skipped_empty_response")
            continue
        report.examples.append(TrainingExample(
            sample_id=sample.id,
            variant=Variant.TEACHER_SFT,
            segments=(
                _prompt_segment(prompts.render(prompts.PromptKind.DIRECT_INFERENCE,
                                               sample.question)),
                Segment(answer, supervised=True),
            ),
        ))
    report.bump("emitted", len(report.examples))
    return report


def build_cft(samples: Sequence[Sample],
              critiques: Iterable[CritiqueRecord],
              variant: Variant = Variant.CFT) -> BuildReport:
    """Critique training pairs: judge prompt over (question, response)
    unsupervised, the critique text supervised.

    No judgment filtering: correct- and wrong-judged responses are both
    kept (Unknown too), so output size equals the number of eligible
    samples having critiques.
    """
    index = _index_critiques(critiques)
    report = BuildReport()
    report.bump("input", len(samples))
    used: list[CritiqueRecord] = []
    for sample in samples:
        if not sample.response.strip():
            report.bump("skipped_empty_response")
            continue
        record = index.get(sample.id)
        if record is None:
            report.bump("missing_critique")
            continue
        if not record.critique_text.strip():
            report.bump("empty_critique")
            continue
        used.append(record)
        report.examples.append(TrainingExample(
            sample_id=sample.id,
            variant=variant,
            segments=(
                _prompt_segment(prompts.render(prompts.PromptKind.CRITIQUE_TEACHER,
                                               sample.question, sample.response)),
                Segment(record.critique_text, supervised=True),
            ),
        ))
    report.correct_rate = judgment_stats(used).correct_rate
    report.bump("emitted", len(report.examples))
    return report


def example_token_len(example: TrainingExample) -> int:
    """Whitespace-token proxy length of the full model-visible sequence."""
    return sum(approx_token_len(seg.text) for seg in example.segments)


def build_cft_short(samples: Sequence[Sample],
                    critiques: Iterable[CritiqueRecord],
                    token_budget: float) -> BuildReport:
    """CFT restricted to examples whose prompt+critique length fits the budget."""
    if token_budget < 1:
        raise ValidationError("token_budget must be at least 1")
    base = build_cft(samples, critiques, variant=Variant.CFT_SHORT)
    report = BuildReport(counts=dict(base.counts), correct_rate=base.correct_rate)
    for example in base.examples:
        if example_token_len(example) <= token_budget:
            report.examples.append(example)
        else:
            report.bump("over_token_budget")
    report.counts["emitted"] = len(report.examples)
    return report


def default_cft_short_budget(samples: Sequence[Sample]) -> float:
    """Median SFT example length of the corpus: the length-parity default."""
    lengths = [example_token_len(e) for e in build_sft(samples).examples]
    if not lengths:
        raise ValidationError("cannot derive a token budget from an empty corpus")
    return statistics.median(lengths)


class MixOrder(Enum):
    MIXED = "mixed"
    TWO_STAGE = "two-stage"


@dataclass
class MixResult:
    examples: list[TrainingExample]
    stage_boundary: int | None = None


def mix_datasets(a: Sequence[TrainingExample], b: Sequence[TrainingExample],
                 count_a: int, count_b: int, order: MixOrder,
                 seed: int = 0) -> MixResult:
    """Combine two datasets either interleaved or as sequential stages.

    Mixed applies a seeded shuffle over the concatenation; TwoStage keeps
    a's examples first and reports the boundary index so the trainer can
    schedule sequential phases (the boundary lands in the sidecar manifest,
    not in the records).
    """
    if count_a < 0 or count_a > len(a):
        raise ValidationError(f"count_a={count_a} exceeds dataset size {len(a)}")
    if count_b < 0 or count_b > len(b):
        raise ValidationError(f"count_b={count_b} exceeds dataset size {len(b)}")
    head_a, head_b = list(a[:count_a]), list(b[:count_b])
    if order is MixOrder.TWO_STAGE:
        return MixResult(head_a + head_b, stage_boundary=count_a)
    combined = head_a + head_b
    random.Random(seed).shuffle(combined)
    return MixResult(combined, stage_boundary=None)


@dataclass
class GenerationFailure:
    index: int
    question: str
    error: str


def generate_noisy_responses(
    questions: Sequence[str],
    client: TeacherClient,
    subjects: Sequence[str | None] | None = None,
) -> tuple[list[Sample], list[GenerationFailure]]:
    """Ask the student model to answer each question at temperature 0.0;
    the completions become self-generated noisy responses that then flow
    through the normal critique pipeline."""
    reqs = [
        ChatRequest(user=prompts.render(prompts.PromptKind.DIRECT_INFERENCE, q),
                    temperature=0.0, max_output_tokens=4096)
        for q in questions
    ]
    samples: list[Sample] = []
    failures: list[GenerationFailure] = []
    for index, outcome in client.complete_batch(reqs):
        if isinstance(outcome, Exception):
            failures.append(GenerationFailure(index, questions[index], str(outcome)))
            continue
        subject = subjects[index] if subjects else None
        samples.append(Sample.create(questions[index], outcome, SELF_GENERATED,
                                     subject=subject))
    return samples, failures


_CONFIG_FIELDS = ("learning_rate", "schedule", "warmup_ratio",
                  "global_batch_size", "epochs", "validation_set")


def emit_train_config(overrides: Mapping[str, object] | None = None
                      ) -> tuple[TrainConfig, list[str]]:
    """Reference hyperparameters with field-wise overrides.

    Returns the config plus the sorted list of overridden field names so
    emission can record what deviated from the defaults.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(_CONFIG_FIELDS)
    if unknown:
        raise ValidationError(f"unknown train config fields: {sorted(unknown)}")
    base = TrainConfig().to_dict()
    base.update(overrides)
    config = TrainConfig.from_dict(base)
    return config, sorted(overrides)
