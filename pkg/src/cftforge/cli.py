"""Command-line entry point wiring all subcommands.

Exit codes: 0 success, 1 validation/usage error, 2 transport exhaustion.
Every file-producing run writes a sidecar manifest at <out>.manifest.json
holding the arguments, input/output content hashes, seed, rule versions,
and counters; manifests are deterministic so warm-cache reruns are
byte-identical end to end.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import random
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping, Sequence

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 fallback
    import tomli as tomllib

from . import __version__, answers, critique, forge, inference, prompts, report
from .client import DEFAULT_API_KEY_ENV, ChatRequest, EndpointConfig, ResponseCache, TeacherClient
from .errors import ClientError, TransportError, UsageError, ValidationError
from .types import (
    CritiqueRecord,
    InferenceStrategy,
    Sample,
    ScoreTable,
    StrategyKind,
    Variant,
    WEBINSTRUCT,
    load_critiques,
    load_eval_records,
    load_items,
    load_samples,
    load_training_examples,
    read_jsonl,
    save_critiques,
    save_eval_records,
    save_samples,
    save_training_examples,
    write_jsonl,
)

log = logging.getLogger("cftforge")

_VARIANT_FLAGS = {
    "sft": Variant.SFT,
    "verified": Variant.VERIFIED_SFT,
    "teacher": Variant.TEACHER_SFT,
    "cft": Variant.CFT,
    "cft-short": Variant.CFT_SHORT,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


class _JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "level": record.levelname.lower(),
            "logger": record.name,
            "msg": record.getMessage(),
        }
        return json.dumps(payload, ensure_ascii=False)


def _setup_logging(mode: str, level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if mode == "json":
        handler.setFormatter(_JsonLogFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("cftforge")
    root.handlers[:] = [handler]
    root.setLevel(level.upper())


# --- config & endpoint resolution -------------------------------------------

def _load_config(path: str | None) -> dict:
    if path is None:
        default = Path("cftforge.toml")
        if not default.exists():
            return {}
        path = str(default)
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve_endpoint(args: argparse.Namespace, config: Mapping[str, Any]) -> EndpointConfig:
    profile: dict[str, Any] = {}
    profiles = config.get("endpoints", {})
    if getattr(args, "endpoint", None):
        if args.endpoint not in profiles:
            raise UsageError(f"endpoint profile '{args.endpoint}' not found in config")
        profile = dict(profiles[args.endpoint])
    elif len(profiles) == 1:
        profile = dict(next(iter(profiles.values())))

    def pick(flag: str, key: str, default: Any) -> Any:
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return profile.get(key, default)

    base_url = pick("base_url", "base_url", None)
    model = pick("model", "model", None)
    if not base_url or not model:
        raise UsageError("an endpoint requires --base-url and --model "
                         "(or an endpoint profile in the config file)")
    return EndpointConfig(
        base_url=base_url,
        model=model,
        api_key_env=pick("api_key_env", "api_key_env", DEFAULT_API_KEY_ENV),
        max_parallel=int(pick("max_parallel", "max_parallel", 4)),
        timeout=float(pick("timeout", "timeout", 120.0)),
        max_retries=int(pick("max_retries", "max_retries", 3)),
        retry_base_delay=float(pick("retry_base_delay", "retry_base_delay", 0.5)),
    )


def _make_client(args: argparse.Namespace, config: Mapping[str, Any]) -> TeacherClient:
    endpoint = _resolve_endpoint(args, config)
    cache_dir = getattr(args, "cache_dir", None) or config.get("cache_dir", ".cftforge-cache")
    return TeacherClient(endpoint, cache=ResponseCache(cache_dir))


def _add_endpoint_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--endpoint", help="named endpoint profile from the config file")
    parser.add_argument("--base-url", dest="base_url", help="endpoint base URL")
    parser.add_argument("--model", help="model identifier sent to the endpoint")
    parser.add_argument("--api-key-env", dest="api_key_env",
                        help=f"env var holding the API key (default {DEFAULT_API_KEY_ENV})")
    parser.add_argument("--max-parallel", dest="max_parallel", type=int)
    parser.add_argument("--timeout", type=float)
    parser.add_argument("--max-retries", dest="max_retries", type=int)
    parser.add_argument("--retry-base-delay", dest="retry_base_delay", type=float)
    parser.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")


# --- manifests ---------------------------------------------------------------

def _sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest_args(args: argparse.Namespace) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(value, (str, int, float, bool)) or value is None:
            out[key] = value
    return out


def write_manifest(out_path: str | Path, command: str, args: argparse.Namespace,
                   inputs: Sequence[str | Path], counts: Mapping[str, Any],
                   seed: int | None = None, extra: Mapping[str, Any] | None = None) -> Path:
    manifest: dict[str, Any] = {
        "command": command,
        "args": _manifest_args(args),
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "outputs": {str(out_path): _sha256_file(out_path)},
        "seed": seed,
        "versions": {
            "package": __version__,
            "templates": prompts.TEMPLATE_VERSION,
            "parser_rules": critique.PARSER_RULES_VERSION,
            "equivalence_rules": answers.EQUIVALENCE_RULES_VERSION,
        },
        "counts": dict(counts),
    }
    if extra:
        manifest.update(extra)
    path = Path(f"{out_path}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _batch_exit(successes: int, transport_failures: int) -> int:
    if transport_failures and successes == 0:
        return 2
    return 0


# --- subcommand handlers ------------------------------------------------------

def cmd_ingest(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    mapping = {"question": "question", "response": "response", "subject": None}
    for spec in args.map or []:
        if "=" not in spec:
            raise UsageError(f"--map expects key=column, got '{spec}'")
        key, column = spec.split("=", 1)
        if key not in ("question", "response", "subject"):
            raise UsageError(f"--map key must be question/response/subject, got '{key}'")
        mapping[key] = column

    rows = _read_tabular(args.infile)
    counts = {"rows_read": len(rows)}
    if args.count is not None:
        if args.count >= len(rows):
            if args.count > len(rows):
                log.warning("--count %d exceeds %d rows; keeping all",
                            args.count, len(rows))
        else:
            rng = random.Random(args.seed)
            keep = sorted(rng.sample(range(len(rows)), args.count))
            rows = [rows[i] for i in keep]
    counts["selected"] = len(rows)

    samples: list[Sample] = []
    seen: set[str] = set()
    skipped_invalid = duplicates = 0
    for row in rows:
        question = str(row.get(mapping["question"], "") or "")
        response = str(row.get(mapping["response"], "") or "")
        subject = None
        if mapping["subject"]:
            raw = row.get(mapping["subject"])
            subject = str(raw) if raw not in (None, "") else None
        if not question.strip():
            skipped_invalid += 1
            continue
        sample = Sample.create(question, response, args.source, subject=subject)
        if sample.id in seen:
            duplicates += 1
            continue
        seen.add(sample.id)
        samples.append(sample)
    counts.update(skipped_invalid=skipped_invalid, duplicates=duplicates,
                  emitted=len(samples))
    save_samples(args.out, samples)
    write_manifest(args.out, "ingest", args, [args.infile], counts, seed=args.seed)
    log.info("ingested %d samples from %d rows", len(samples), counts["rows_read"])
    return 0


def _read_tabular(path: str) -> list[dict]:
    if path.endswith(".csv"):
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    return list(read_jsonl(path))


def cmd_critique(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    client = _make_client(args, config)
    samples = load_samples(args.infile)
    counts: dict[str, Any] = {"input": len(samples)}

    if args.mode == "critique":
        eligible = [s for s in samples if s.response.strip()]
        counts["skipped_empty_response"] = len(samples) - len(eligible)
        kind = prompts.PromptKind.CRITIQUE_TEACHER
        reqs = [ChatRequest(user=prompts.render(kind, s.question, s.response),
                            temperature=args.temperature)
                for s in eligible]
    else:
        eligible = list(samples)
        kind = prompts.PromptKind.REFERENCE_ANSWER
        reqs = [ChatRequest(user=prompts.render(kind, s.question),
                            temperature=args.temperature)
                for s in eligible]

    records: list[dict] = []
    critique_records: list[CritiqueRecord] = []
    failures = 0
    for sample, req in zip(eligible, reqs):
        try:
            meta = client.complete_with_meta(req)
        except ClientError as exc:
            failures += 1
            log.warning("sample %s failed: %s", sample.id, exc)
            continue
        if args.mode == "critique":
            fingerprint = prompts.fingerprint(kind, sample.question, sample.response)
            critique_records.append(CritiqueRecord(
                sample_id=sample.id,
                teacher_model=client.config.model,
                prompt_fingerprint=fingerprint,
                critique_text=meta.content,
                judgment=critique.parse_judgment(meta.content).judgment,
                created_at=meta.fetched_at,
            ))
        else:
            records.append({
                "sample_id": sample.id,
                "answer": meta.content,
                "teacher_model": client.config.model,
                "prompt_fingerprint": prompts.fingerprint(kind, sample.question),
                "created_at": meta.fetched_at,
            })

    counts["failures"] = failures
    if args.mode == "critique":
        counts["emitted"] = len(critique_records)
        stats = critique.judgment_stats(critique_records)
        counts.update(stats.to_dict())
        save_critiques(args.out, critique_records)
        successes = len(critique_records)
    else:
        counts["emitted"] = len(records)
        write_jsonl(args.out, records)
        successes = len(records)
    write_manifest(args.out, "critique", args, [args.infile], counts,
                   extra={"endpoint": client.config.to_dict()})
    log.info("%s mode: %d emitted, %d failures", args.mode, successes, failures)
    return _batch_exit(successes, failures)


def cmd_gen_responses(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    client = _make_client(args, config)
    rows = list(read_jsonl(args.questions))
    questions = []
    subjects = []
    for row in rows:
        question = str(row.get("question", "") or "")
        if question.strip():
            questions.append(question)
            subjects.append(row.get("subject"))
    samples, failures = forge.generate_noisy_responses(questions, client, subjects)
    save_samples(args.out, samples)
    counts = {"input": len(rows), "emitted": len(samples), "failures": len(failures)}
    write_manifest(args.out, "gen-responses", args, [args.questions], counts,
                   extra={"failed_questions": [f.index for f in failures],
                          "endpoint": client.config.to_dict()})
    log.info("generated %d self-responses, %d failures", len(samples), len(failures))
    return _batch_exit(len(samples), len(failures))


def cmd_parse_critiques(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    records = load_critiques(args.infile)
    reparsed = [critique.reparse_record(r, strict=args.strict) for r in records]
    changed = sum(1 for old, new in zip(records, reparsed) if old.judgment != new.judgment)
    out = args.out or args.infile
    save_critiques(out, reparsed)
    stats = critique.judgment_stats(reparsed)
    print(json.dumps(stats.to_dict(), ensure_ascii=False))
    counts = {"input": len(records), "rewritten": changed, **stats.to_dict()}
    write_manifest(out, "parse-critiques", args,
                   [args.infile] if out != args.infile else [], counts)
    return 0


def cmd_build(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    variant = _VARIANT_FLAGS[args.variant]
    samples = load_samples(args.infile)
    needs_critiques = variant in (Variant.VERIFIED_SFT, Variant.CFT, Variant.CFT_SHORT)
    if needs_critiques and not args.critiques:
        raise UsageError(f"--variant {args.variant} requires --critiques")
    if variant is Variant.TEACHER_SFT and not args.teacher_answers:
        raise UsageError("--variant teacher requires --teacher-answers")

    inputs = [args.infile]
    extra: dict[str, Any] = {}
    if variant is Variant.SFT:
        result = forge.build_sft(samples)
    elif variant is Variant.VERIFIED_SFT:
        inputs.append(args.critiques)
        result = forge.build_verified_sft(samples, load_critiques(args.critiques),
                                          size_cap=args.size_cap)
    elif variant is Variant.TEACHER_SFT:
        inputs.append(args.teacher_answers)
        answers_map = {r["sample_id"]: r["answer"]
                       for r in read_jsonl(args.teacher_answers)}
        result = forge.build_teacher_sft(samples, answers_map)
    elif variant is Variant.CFT:
        inputs.append(args.critiques)
        result = forge.build_cft(samples, load_critiques(args.critiques))
    else:
        inputs.append(args.critiques)
        budget = args.token_budget
        if budget is None:
            budget = forge.default_cft_short_budget(samples)
            log.info("token budget defaulted to corpus median %.1f", budget)
        result = forge.build_cft_short(samples, load_critiques(args.critiques), budget)
        extra["token_budget"] = budget

    if not result.examples:
        log.warning("build produced no examples (variant %s)", args.variant)
    save_training_examples(args.out, result.examples)
    counts = dict(result.counts)
    if result.correct_rate is not None:
        counts["correct_rate"] = result.correct_rate
    write_manifest(args.out, "build", args, inputs, counts, extra=extra)
    log.info("built %d %s examples", len(result.examples), args.variant)
    return 0


def cmd_mix(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    a = load_training_examples(args.a)
    b = load_training_examples(args.b)
    order = forge.MixOrder.TWO_STAGE if args.order == "two-stage" else forge.MixOrder.MIXED
    result = forge.mix_datasets(a, b, args.count_a, args.count_b, order, seed=args.seed)
    save_training_examples(args.out, result.examples)
    counts = {"count_a": args.count_a, "count_b": args.count_b,
              "emitted": len(result.examples)}
    extra = {"stage_boundary": result.stage_boundary}
    write_manifest(args.out, "mix", args, [args.a, args.b], counts,
                   seed=args.seed, extra=extra)
    return 0


def cmd_emit_config(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    overrides: dict[str, Any] = {}
    for flag, key in (("learning_rate", "learning_rate"),
                      ("warmup_ratio", "warmup_ratio"),
                      ("global_batch_size", "global_batch_size"),
                      ("epochs", "epochs"),
                      ("schedule", "schedule"),
                      ("validation_set", "validation_set")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    train_config, overridden = forge.emit_train_config(overrides)
    payload = train_config.to_dict()
    payload["overridden"] = overridden
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    write_manifest(args.out, "emit-config", args, [], {"overridden": len(overridden)})
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    endpoint = _resolve_endpoint(args, config)
    cache_dir = args.cache_dir or config.get("cache_dir", ".cftforge-cache")
    items = load_items(args.items)
    temperature = args.temperature
    if temperature is None:
        temperature = (inference.DEFAULT_DIRECT_TEMPERATURE if args.strategy == "direct"
                       else inference.DEFAULT_SELF_CRITIQUE_TEMPERATURE)
    strategy = InferenceStrategy(
        kind={"direct": StrategyKind.DIRECT,
              "single-pass": StrategyKind.SINGLE_PASS,
              "two-stage": StrategyKind.TWO_STAGE}[args.strategy],
        temperature=temperature,
        max_iterations=args.max_iters,
    )
    spec = inference.EvalRunSpec(endpoint=endpoint, items=tuple(items),
                                 strategy=strategy, out_path=args.out)
    records, score_map = inference.run_spec(
        spec, cache=ResponseCache(cache_dir),
        critique_temperature=args.critique_temperature)
    printable = {b.value: v for b, v in score_map.items()}
    print(json.dumps(printable, sort_keys=True))
    failures = sum(1 for r in records if r.error)
    counts = {"items": len(items), "records": len(records), "failures": failures,
              "scores": printable}
    write_manifest(args.out, "eval", args, [args.items], counts,
                   extra={"endpoint": endpoint.to_dict()})
    return _batch_exit(len(records) - failures, failures)


def cmd_verify(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    records = load_eval_records(args.pred)
    golds = {item.id: item.gold_answer for item in load_items(args.gold)}
    rewritten = []
    missing = 0
    for record in records:
        gold = golds.get(record.item_id)
        if gold is None:
            missing += 1
            rewritten.append(record)
            continue
        extracted, verdict = answers.grade(record.raw_output, gold)
        rewritten.append(replace(record, extracted_answer=extracted.text or None,
                                 verdict=verdict))
    out = args.out or args.pred
    save_eval_records(out, rewritten)
    score_map = answers.score(rewritten)
    printable = {b.value: v for b, v in score_map.items()}
    print(json.dumps(printable, sort_keys=True))
    counts = {"records": len(records), "missing_gold": missing, "scores": printable}
    write_manifest(out, "verify", args, [args.pred, args.gold] if out != args.pred
                   else [args.gold], counts)
    return 0


def cmd_report(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    with open(args.scores, "r", encoding="utf-8") as fh:
        table = ScoreTable.from_dict(json.load(fh))
    lines = _render_report(table, args)
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(args.out, "report", args, [args.scores],
                       {"rows": len(table.rows), "columns": len(table.benchmarks)})
    print(text, end="")
    return 0


def _render_report(table: ScoreTable, args: argparse.Namespace) -> list[str]:
    columns = [b.value for b in table.benchmarks]
    rows = report.table_with_average(table)
    delta = None
    if args.compare:
        label = args.compare.split(":", 1)[1] if args.compare.startswith("cft:") else args.compare
        if not args.against:
            raise UsageError("--compare requires --against with baseline row labels")
        spec = report.ComparisonSpec(table, label,
                                     tuple(x for x in args.against.split(",") if x))
        delta = report.delta_row(spec)

    def one(value: float) -> str:
        from decimal import Decimal, ROUND_HALF_UP
        return str(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))

    if args.format == "csv":
        lines = ["label," + ",".join(columns) + ",AVG"]
        for label, scores, avg in rows:
            lines.append(",".join([label, *(one(scores[c]) for c in columns), one(avg)]))
        if delta is not None:
            cells = [one(delta.per_benchmark[b]) for b in table.benchmarks]
            lines.append(",".join(["delta", *cells, one(delta.average)]))
        return lines
    lines = ["| Model | " + " | ".join(columns) + " | AVG |",
             "|---|" + "---:|" * (len(columns) + 1)]
    for label, scores, avg in rows:
        cells = " | ".join(one(scores[c]) for c in columns)
        lines.append(f"| {label} | {cells} | {one(avg)} |")
    if delta is not None:
        cells = " | ".join(one(delta.per_benchmark[b]) for b in table.benchmarks)
        lines.append(f"| Δ = CFT - SFT_best | {cells} | {one(delta.average)} |")
    return lines


def cmd_dump_prompts(args: argparse.Namespace, config: Mapping[str, Any]) -> int:
    print(prompts.dump_prompts(), end="")
    return 0


# --- parser wiring ------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="cftforge", description=__doc__)
    parser.add_argument("--config", help="TOML config file (default ./cftforge.toml)")
    parser.add_argument("--log", choices=("text", "json"), default="text")
    parser.add_argument("--log-level", default="info")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw csv/jsonl corpus into samples.jsonl")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--map", action="append", metavar="KEY=COLUMN")
    p.add_argument("--source", default=WEBINSTRUCT)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("critique", help="generate teacher critiques or reference answers")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("critique", "reference"), default="critique")
    p.add_argument("--temperature", type=float, default=0.0)
    _add_endpoint_args(p)
    p.set_defaults(func=cmd_critique)

    p = sub.add_parser("gen-responses", help="self-generate noisy responses for questions")
    p.add_argument("--questions", required=True)
    p.add_argument("--out", required=True)
    _add_endpoint_args(p)
    p.set_defaults(func=cmd_gen_responses)

    p = sub.add_parser("parse-critiques", help="re-parse judgments and print stats")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true",
                   help="audit mode: require the exact 'Conclusion: right/wrong [END]' format")
    p.set_defaults(func=cmd_parse_critiques)

    p = sub.add_parser("build", help="build a training dataset variant")
    p.add_argument("--variant", choices=sorted(_VARIANT_FLAGS), required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--critiques")
    p.add_argument("--teacher-answers", dest="teacher_answers")
    p.add_argument("--out", required=True)
    p.add_argument("--size-cap", dest="size_cap", type=int)
    p.add_argument("--token-budget", dest="token_budget", type=float)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("mix", help="combine two training datasets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--count-a", dest="count_a", type=int, required=True)
    p.add_argument("--count-b", dest="count_b", type=int, required=True)
    p.add_argument("--order", choices=("mixed", "two-stage"), default="mixed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("emit-config", help="emit training hyperparameters")
    p.add_argument("--out", required=True)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--warmup-ratio", dest="warmup_ratio", type=float)
    p.add_argument("--global-batch-size", dest="global_batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--schedule")
    p.add_argument("--validation-set", dest="validation_set")
    p.set_defaults(func=cmd_emit_config)

    p = sub.add_parser("eval", help="run a model over benchmark items")
    p.add_argument("--strategy", choices=("direct", "single-pass", "two-stage"),
                   required=True)
    p.add_argument("--temperature", type=float)
    p.add_argument("--critique-temperature", dest="critique_temperature", type=float,
                   help="two-stage critique calls; defaults to the solve temperature")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=8)
    p.add_argument("--items", required=True)
    p.add_argument("--out", required=True)
    _add_endpoint_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="recompute verdicts against gold answers")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render score tables and improvement rows")
    p.add_argument("--scores", required=True)
    p.add_argument("--compare", metavar="cft:ROW")
    p.add_argument("--against", metavar="ROW1,ROW2")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dump-prompts", help="print all prompt templates for audit")
    p.set_defaults(func=cmd_dump_prompts)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _setup_logging(args.log, args.log_level)
        config = _load_config(args.config)
        return args.func(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 2
    except ClientError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
