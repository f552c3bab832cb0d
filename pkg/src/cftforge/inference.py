"""Benchmark runs under the three inference strategies.

Direct inference issues one greedy completion and extracts the boxed answer.
Single-pass self-critique also issues exactly one call: the model solves,
critiques itself, and optionally corrects within the same output, so the
last boxed group implements "the corrected answer wins". Two-stage
self-critique alternates solve and critique calls, stopping at the first
Correct verdict or after ``max_iterations`` rounds, in which case the last
generated solution is used.

Transport failures never abort a run: the item finalizes with the last
available solution, or a false verdict and an error note when there is none.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from . import prompts
from .answers import grade, score
from .client import ChatRequest, EndpointConfig, ResponseCache, TeacherClient
from .critique import parse_judgment
from .errors import ClientError
from .types import (
    Benchmark,
    BenchmarkItem,
    EvalRecord,
    InferenceStrategy,
    Judgment,
    StrategyKind,
    save_eval_records,
)

SOLVE_MAX_TOKENS = 4096
CRITIQUE_MAX_TOKENS = 2048

DEFAULT_DIRECT_TEMPERATURE = 0.0
DEFAULT_SELF_CRITIQUE_TEMPERATURE = 0.1
# Canonical sweep for the self-critique strategies.
SELF_CRITIQUE_TEMPERATURE_SWEEP = (0.1, 0.3, 0.6)


@dataclass(frozen=True)
class EvalRunSpec:
    """A full evaluation run: endpoint, item set, strategy, output target."""

    endpoint: EndpointConfig
    items: tuple[BenchmarkItem, ...]
    strategy: InferenceStrategy
    out_path: str | None = None


def _record(item: BenchmarkItem, strategy: InferenceStrategy, model: str,
            raw_output: str, num_calls: int, iterations_used: int | None = None,
            error: str | None = None) -> EvalRecord:
    extracted, verdict = grade(raw_output, item.gold_answer)
    return EvalRecord(
        item_id=item.id,
        benchmark=item.benchmark,
        strategy=strategy,
        model=model,
        raw_output=raw_output,
        extracted_answer=extracted.text if extracted.text else None,
        verdict=verdict,
        num_model_calls=max(num_calls, 1),
        iterations_used=iterations_used,
        error=error,
    )


def run_direct(item: BenchmarkItem, client: TeacherClient,
               temperature: float = DEFAULT_DIRECT_TEMPERATURE,
               seed: int | None = None) -> EvalRecord:
    strategy = InferenceStrategy(StrategyKind.DIRECT, temperature)
    req = ChatRequest(
        user=prompts.render(prompts.PromptKind.DIRECT_INFERENCE, item.question),
        temperature=temperature, max_output_tokens=SOLVE_MAX_TOKENS, seed=seed)
    try:
        output = client.complete(req)
    except ClientError as exc:
        return _record(item, strategy, client.config.model, "", 1, error=str(exc))
    return _record(item, strategy, client.config.model, output, 1)


def run_single_pass(item: BenchmarkItem, client: TeacherClient,
                    temperature: float = DEFAULT_SELF_CRITIQUE_TEMPERATURE,
                    seed: int | None = None) -> EvalRecord:
    strategy = InferenceStrategy(StrategyKind.SINGLE_PASS, temperature)
    req = ChatRequest(
        user=prompts.render(prompts.PromptKind.SINGLE_PASS_SELF_CRITIQUE,
                            item.question),
        temperature=temperature, max_output_tokens=SOLVE_MAX_TOKENS, seed=seed)
    try:
        output = client.complete(req)
    except ClientError as exc:
        return _record(item, strategy, client.config.model, "", 1, error=str(exc))
    return _record(item, strategy, client.config.model, output, 1)


def run_two_stage(item: BenchmarkItem, client: TeacherClient,
                  temperature: float = DEFAULT_SELF_CRITIQUE_TEMPERATURE,
                  max_iterations: int = 8,
                  critique_temperature: float | None = None) -> EvalRecord:
    """Solve, self-critique, and regenerate until a Correct verdict.

    Unknown verdicts continue the loop (only Correct stops it). Each solve
    call carries the iteration index as its sampling seed so regeneration
    attempts stay distinct in the response cache; a warm cache replays the
    identical trajectory. Critique calls reuse the solve temperature unless
    overridden.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    strategy = InferenceStrategy(StrategyKind.TWO_STAGE, temperature, max_iterations)
    crit_temp = temperature if critique_temperature is None else critique_temperature
    model = client.config.model

    calls = 0
    iterations_used = 0
    solution: str | None = None
    error: str | None = None
    for iteration in range(1, max_iterations + 1):
        calls += 1
        try:
            solution = client.complete(ChatRequest(
                user=prompts.render(prompts.PromptKind.TWO_STAGE_SOLVE, item.question),
                temperature=temperature, max_output_tokens=SOLVE_MAX_TOKENS,
                seed=iteration))
        except ClientError as exc:
            error = str(exc)
            break
        calls += 1
        try:
            critique_text = client.complete(ChatRequest(
                user=prompts.render(prompts.PromptKind.TWO_STAGE_CRITIQUE,
                                    item.question, solution),
                temperature=crit_temp, max_output_tokens=CRITIQUE_MAX_TOKENS))
        except ClientError as exc:
            error = str(exc)
            break
        iterations_used = iteration
        if parse_judgment(critique_text).judgment is Judgment.CORRECT:
            break
    return _record(item, strategy, model, solution or "", calls,
                   iterations_used=iterations_used or None, error=error)


_RUNNERS: dict[StrategyKind, Callable[..., EvalRecord]] = {
    StrategyKind.DIRECT: run_direct,
    StrategyKind.SINGLE_PASS: run_single_pass,
    StrategyKind.TWO_STAGE: run_two_stage,
}


def run_item(item: BenchmarkItem, client: TeacherClient,
             strategy: InferenceStrategy,
             critique_temperature: float | None = None) -> EvalRecord:
    if strategy.kind is StrategyKind.TWO_STAGE:
        return run_two_stage(item, client, strategy.temperature,
                             strategy.max_iterations,
                             critique_temperature=critique_temperature)
    return _RUNNERS[strategy.kind](item, client, strategy.temperature)


def run_suite(client: TeacherClient, items: Sequence[BenchmarkItem],
              strategy: InferenceStrategy,
              on_progress: Callable[[int, int], None] | None = None,
              critique_temperature: float | None = None
              ) -> list[EvalRecord]:
    """One record per item, bounded item-level parallelism, item order kept.

    Each item's two-stage loop is strictly sequential; resumability comes
    from the client's response cache.
    """
    if not items:
        return []
    records: list[EvalRecord | None] = [None] * len(items)
    workers = min(client.config.max_parallel, len(items))

    def work(index: int) -> None:
        records[index] = run_item(items[index], client, strategy,
                                  critique_temperature)
        if on_progress is not None:
            on_progress(sum(r is not None for r in records), len(items))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, range(len(items))))
    return [r for r in records if r is not None]


def run_spec(spec: EvalRunSpec, cache: ResponseCache | None = None,
             transport=None,
             critique_temperature: float | None = None
             ) -> tuple[list[EvalRecord], dict[Benchmark, float]]:
    """Execute a full run spec; writes ``out_path`` when set and returns the
    records plus the per-benchmark score map."""
    client = TeacherClient(spec.endpoint, cache=cache, transport=transport)
    records = run_suite(client, spec.items, spec.strategy,
                        critique_temperature=critique_temperature)
    if spec.out_path is not None:
        save_eval_records(spec.out_path, records)
    return records, score(records)
