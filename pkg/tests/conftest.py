import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cftforge.client import EndpointConfig
from cftforge.types import CritiqueRecord, Judgment, Sample

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture()
def items_path() -> Path:
    return DATA_DIR / "items.jsonl"


@pytest.fixture()
def critique_corpus() -> list[dict]:
    return json.loads((DATA_DIR / "critique_corpus.json").read_text(encoding="utf-8"))


@pytest.fixture()
def endpoint_config() -> EndpointConfig:
    return EndpointConfig(base_url="http://test.invalid/v1", model="fake-model",
                          max_parallel=3, timeout=5.0, max_retries=2,
                          retry_base_delay=0.0)


def make_corpus(n: int, seed: int = 0, include_unknown: bool = False
                ) -> tuple[list[Sample], list[CritiqueRecord]]:
    """Random nonempty-sample corpus with one critique per sample."""
    rng = random.Random(seed)
    samples = []
    critiques = []
    for i in range(n):
        question = f"Question {i}: compute {rng.randint(1, 99)} + {rng.randint(1, 99)}."
        response = " ".join(f"w{rng.randint(0, 9)}" for _ in range(rng.randint(3, 40)))
        sample = Sample.create(question, response, "WebInstruct")
        samples.append(sample)
        choices = ["right", "wrong"] + (["none"] if include_unknown else [])
        verdict = rng.choice(choices)
        if verdict == "none":
            text = "The write-up is tidy and the notation is consistent."
            judgment = Judgment.UNKNOWN
        else:
            text = (" ".join(f"c{rng.randint(0, 9)}" for _ in range(rng.randint(2, 30)))
                    + f"\nConclusion: {verdict} [END]")
            judgment = Judgment.CORRECT if verdict == "right" else Judgment.WRONG
        critiques.append(CritiqueRecord(
            sample_id=sample.id,
            teacher_model="fake-teacher",
            prompt_fingerprint="f" * 64,
            critique_text=text,
            judgment=judgment,
            created_at="2026-01-01T00:00:00Z",
        ))
    return samples, critiques
