"""Score-table arithmetic: row averages, improvement rows, rendering.

All arithmetic runs in decimal with half-up rounding to one place, because
that is the printed convention of the tables being reproduced (57.0833 ->
57.1, 35.05 -> 35.1; binary floats would round the .x5 cases down). The
improvement row subtracts, per benchmark column, the best baseline score in
that column; its AVG entry is the difference of the row averages, not the
average of the column deltas (50.4 vs 57.1 gives the printed 6.7 where
column-delta averaging would give 6.13).
"""
from __future__ import annotations

import io
import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .errors import ValidationError
from .types import Benchmark, ScoreRow, ScoreTable


def _dec(value: float) -> Decimal:
    return Decimal(str(value))


def _round1(value: Decimal) -> Decimal:
    return value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def row_average(scores: Iterable[float]) -> float:
    """Arithmetic mean, half-up to one decimal."""
    values = [_dec(v) for v in scores]
    if not values:
        raise ValidationError("row_average requires at least one score")
    return float(_round1(sum(values) / len(values)))


@dataclass(frozen=True)
class ComparisonSpec:
    table: ScoreTable
    cft_row_label: str
    sft_row_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.sft_row_labels:
            raise ValidationError("at least one baseline row label is required")
        labels = {row.label for row in self.table.rows}
        for label in (self.cft_row_label, *self.sft_row_labels):
            if label not in labels:
                raise ValidationError(f"no row labelled '{label}'")


@dataclass(frozen=True)
class DeltaRow:
    per_benchmark: dict[Benchmark, float]
    average: float


def delta_row(spec: ComparisonSpec) -> DeltaRow:
    """Per-column improvement over the best baseline, plus the AVG delta.

    Each benchmark column compares against the maximum across the baseline
    rows for that column; the average entry is the difference of the
    (rounded) row averages.
    """
    cft = spec.table.row(spec.cft_row_label)
    baselines = [spec.table.row(label) for label in spec.sft_row_labels]
    columns = spec.table.benchmarks
    for row in (cft, *baselines):
        for benchmark in columns:
            if benchmark not in row.scores:
                raise ValidationError(
                    f"row '{row.label}' is missing column {benchmark.value}")
    per_benchmark = {}
    for benchmark in columns:
        best = max(_dec(row.scores[benchmark]) for row in baselines)
        per_benchmark[benchmark] = float(_round1(_dec(cft.scores[benchmark]) - best))
    cft_avg = _dec(row_average(cft.scores.values()))
    best_avg = max(_dec(row_average(row.scores.values())) for row in baselines)
    return DeltaRow(per_benchmark=per_benchmark,
                    average=float(_round1(cft_avg - best_avg)))


def _fmt(value: float) -> str:
    return str(_round1(_dec(value)))


def render_table(table: ScoreTable, fmt: str = "markdown") -> str:
    """Deterministic text rendering: benchmark-enum column order, rows
    sorted by label, one decimal everywhere."""
    columns = table.benchmarks
    rows = sorted(table.rows, key=lambda r: r.label)
    if fmt == "markdown":
        lines = ["| Model | " + " | ".join(b.value for b in columns) + " |",
                 "|---|" + "---:|" * len(columns)]
        for row in rows:
            cells = " | ".join(_fmt(row.scores[b]) for b in columns)
            lines.append(f"| {row.label} | {cells} |")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["label", *(b.value for b in columns)])
        for row in rows:
            writer.writerow([row.label, *(_fmt(row.scores[b]) for b in columns)])
        return buffer.getvalue()
    raise ValidationError(f"unknown table format '{fmt}'")


def score_table_from_csv(text: str) -> ScoreTable:
    """Inverse of the csv rendering."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return ScoreTable(rows=())
    header = rows[0]
    if not header or header[0] != "label":
        raise ValidationError("csv header must start with 'label'")
    by_value = {b.value: b for b in Benchmark}
    try:
        benchmarks = [by_value[name] for name in header[1:]]
    except KeyError as exc:
        raise ValidationError(f"unknown benchmark column {exc}") from exc
    parsed = []
    for row in rows[1:]:
        if not row:
            continue
        scores = {b: float(v) for b, v in zip(benchmarks, row[1:])}
        parsed.append(ScoreRow(label=row[0], scores=scores))
    return ScoreTable(rows=tuple(parsed))


def score_map_row(label: str, scores: dict[Benchmark, float]) -> ScoreRow:
    return ScoreRow(label=label, scores=dict(scores))


def table_with_average(table: ScoreTable) -> list[tuple[str, dict[str, float], float]]:
    """Rows with their AVG, for report output that mirrors the printed tables."""
    out = []
    for row in sorted(table.rows, key=lambda r: r.label):
        out.append((row.label,
                    {b.value: row.scores[b] for b in table.benchmarks},
                    row_average(row.scores.values())))
    return out
