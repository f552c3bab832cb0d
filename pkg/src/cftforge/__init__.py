"""Critique fine-tuning dataset forge and evaluation toolchain."""

__version__ = "0.1.0"

from .types import (  # noqa: F401
    Benchmark,
    BenchmarkItem,
    CritiqueRecord,
    EvalRecord,
    InferenceStrategy,
    Judgment,
    Sample,
    ScoreRow,
    ScoreTable,
    Segment,
    StrategyKind,
    TrainConfig,
    TrainingExample,
    Variant,
    sample_id,
)
