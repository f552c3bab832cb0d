import json

import pytest
from hypothesis import given, strategies as st

from cftforge.errors import SchemaError, ValidationError
from cftforge.types import (
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
    load_samples,
    sample_id,
    save_samples,
)

text = st.text(min_size=0, max_size=40)
nonblank = st.text(min_size=1, max_size=40).filter(lambda s: s.strip())


class TestSampleId:
    def test_deterministic(self):
        a = sample_id("Q", "A", "WebInstruct")
        b = sample_id("Q", "A", "WebInstruct")
        assert a == b
        assert a == a.lower()

    def test_response_participates(self):
        assert sample_id("Q", "A", "WebInstruct") != sample_id("Q", "B", "WebInstruct")

    def test_source_participates(self):
        assert sample_id("Q", "A", "WebInstruct") != sample_id("Q", "A", "NuminaMath")

    def test_empty_question_rejected(self):
        with pytest.raises(ValidationError):
            sample_id("", "A", "WebInstruct")
        with pytest.raises(ValidationError):
            sample_id("   ", "A", "WebInstruct")

    @given(q=nonblank, r=text, src=nonblank)
    def test_pure_function(self, q, r, src):
        assert sample_id(q, r, src) == sample_id(q, r, src)


class TestRoundTrips:
    @given(q=nonblank, r=text, subject=st.none() | nonblank)
    def test_sample(self, q, r, subject):
        sample = Sample.create(q, r, "MetaMathQA", subject=subject)
        assert Sample.from_dict(sample.to_dict()) == sample

    def test_sample_jsonl_file(self, tmp_path):
        samples = [Sample.create(f"Q{i}", f"A{i}", "WebInstruct") for i in range(5)]
        path = tmp_path / "samples.jsonl"
        save_samples(path, samples)
        assert load_samples(path) == samples
        raw = path.read_bytes()
        assert raw.endswith(b"\n") and b"\r" not in raw

    @given(judgment=st.sampled_from(list(Judgment)), body=text)
    def test_critique_record(self, judgment, body):
        record = CritiqueRecord("abc", "teacher", "f" * 64, body, judgment,
                                "2026-01-01T00:00:00Z")
        assert CritiqueRecord.from_dict(record.to_dict()) == record

    @given(variant=st.sampled_from(list(Variant)),
           texts=st.lists(text, min_size=1, max_size=4))
    def test_training_example(self, variant, texts):
        segments = [Segment(t, i == 0) for i, t in enumerate(texts)]
        example = TrainingExample("sid", variant, tuple(segments))
        assert TrainingExample.from_dict(example.to_dict()) == example

    @given(kind=st.sampled_from(list(StrategyKind)),
           temperature=st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
           iters=st.integers(min_value=1, max_value=16))
    def test_strategy(self, kind, temperature, iters):
        strategy = InferenceStrategy(kind, temperature, iters)
        assert InferenceStrategy.from_dict(strategy.to_dict()) == strategy

    @given(benchmark=st.sampled_from(list(Benchmark)), verdict=st.booleans())
    def test_eval_record(self, benchmark, verdict):
        record = EvalRecord(
            item_id="i", benchmark=benchmark,
            strategy=InferenceStrategy(StrategyKind.DIRECT, 0.0),
            model="m", raw_output="\\boxed{4}",
            extracted_answer="4", verdict=verdict, num_model_calls=1)
        assert EvalRecord.from_dict(record.to_dict()) == record

    def test_train_config(self):
        config = TrainConfig()
        assert TrainConfig.from_dict(config.to_dict()) == config

    def test_benchmark_item(self):
        item = BenchmarkItem("x", Benchmark.GSM8K, "Q", "42")
        assert BenchmarkItem.from_dict(item.to_dict()) == item

    def test_score_table(self):
        table = ScoreTable(rows=(
            ScoreRow("a", {Benchmark.MATH: 50.0, Benchmark.GSM8K: 60.0}),
            ScoreRow("b", {Benchmark.MATH: 55.0, Benchmark.GSM8K: 65.0}),
        ))
        assert ScoreTable.from_dict(table.to_dict()) == table


class TestSchemaErrors:
    def test_missing_question_named(self):
        record = Sample.create("Q", "A", "WebInstruct").to_dict()
        del record["question"]
        with pytest.raises(SchemaError) as err:
            Sample.from_dict(record)
        assert "question" in str(err.value)

    def test_unknown_judgment_tag(self):
        record = {"sample_id": "s", "teacher_model": "t", "prompt_fingerprint": "f",
                  "critique_text": "c", "judgment": "maybe",
                  "created_at": "2026-01-01T00:00:00Z"}
        with pytest.raises(SchemaError) as err:
            CritiqueRecord.from_dict(record)
        assert "judgment" in str(err.value)

    def test_unknown_benchmark_tag(self):
        with pytest.raises(SchemaError) as err:
            BenchmarkItem.from_dict({"id": "x", "benchmark": "SAT",
                                     "question": "q", "gold_answer": "1"})
        assert "benchmark" in str(err.value)


class TestInvariants:
    def test_zero_supervised_segments_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            TrainingExample("sid", Variant.SFT, (Segment("a", False),))

    def test_zero_supervised_segments_rejected_at_deserialize(self):
        record = {"sample_id": "s", "variant": "sft",
                  "segments": [{"text": "a", "supervised": False}]}
        with pytest.raises(ValidationError):
            TrainingExample.from_dict(record)

    def test_verdict_requires_extraction(self):
        with pytest.raises(ValidationError):
            EvalRecord("i", Benchmark.MATH,
                       InferenceStrategy(StrategyKind.DIRECT), "m", "out",
                       None, True, 1)

    def test_temperature_bounds(self):
        with pytest.raises(ValidationError):
            InferenceStrategy(StrategyKind.DIRECT, temperature=2.5)

    def test_strategy_defaults(self):
        strategy = InferenceStrategy(StrategyKind.DIRECT)
        assert strategy.temperature == 0.0
        assert InferenceStrategy(StrategyKind.TWO_STAGE, 0.1).max_iterations == 8

    def test_train_config_defaults(self):
        config = TrainConfig()
        assert config.learning_rate == 5e-6
        assert config.schedule.value == "cosine_decay"
        assert config.warmup_ratio == 0.1
        assert config.global_batch_size == 512
        assert config.epochs == 1
        assert config.validation_set is Benchmark.MATH500

    def test_gold_answer_nonempty(self):
        with pytest.raises(ValidationError):
            BenchmarkItem("x", Benchmark.MATH, "q", "")

    def test_score_table_column_mismatch(self):
        with pytest.raises(ValidationError):
            ScoreTable(rows=(ScoreRow("a", {Benchmark.MATH: 1.0}),
                             ScoreRow("b", {Benchmark.GSM8K: 1.0})))

    def test_eval_record_optional_fields_omitted(self):
        record = EvalRecord("i", Benchmark.MATH,
                            InferenceStrategy(StrategyKind.DIRECT), "m", "out",
                            None, False, 1)
        encoded = json.dumps(record.to_dict())
        assert "iterations_used" not in encoded
        assert "error" not in encoded
        assert "extracted_answer" not in encoded
