"""Verdict extraction from free-form critique text.

Real teacher output is noisy: conclusion lines arrive wrapped in markdown
emphasis, with stray qualifier words (misspellings included), with or without
the terminal "[END]" marker, and sometimes more than once when a critique
quotes an earlier verdict. The parser therefore accepts one optional word
before "Conclusion", tolerates emphasis markers and case changes, treats
"[END]" as optional, and lets the last matching occurrence win. Texts with
no conclusion line parse to Unknown; Unknown is a value, not an error.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ValidationError
from .types import CritiqueRecord, Judgment

# Bump when the matching rules change; recorded in run manifests.
PARSER_RULES_VERSION = "1"

_CORRECT_WORDS = frozenset({"right", "correct"})
_WRONG_WORDS = frozenset({"wrong", "incorrect"})

# One optional qualifier word, the token "conclusion", a ':' or '-'
# separator on the same line, then the verdict word. Emphasis markers are
# effectively stripped: they may interleave with spaces before the
# separator and with any whitespace after it (verdicts are often bolded or
# wrapped onto the next line). "[END]" is optional.
_CONCLUSION_RE = re.compile(
    r"(?:\b[A-Za-z]+[ \t]+)?"
    r"[*_]{0,3}conclusion[*_ \t]*[:\-][*_\s]*"
    r"(right|correct|wrong|incorrect)(?![A-Za-z])"
    r"[*_]{0,3}(?:[ \t]*\[END\])?[*_]{0,3}",
    re.IGNORECASE,
)

# Audit mode: the exact requested format only — no qualifier word, verdicts
# limited to right/wrong, "[END]" mandatory.
_STRICT_RE = re.compile(
    r"(?<![A-Za-z] )(?<![A-Za-z])"
    r"[*_]{0,3}conclusion[*_]{0,3}\s*:\s*"
    r"[*_]{0,3}(right|wrong)(?![A-Za-z])"
    r"[*_]{0,3}[ \t]*\[END\][*_]{0,3}",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ParsedConclusion:
    """A verdict plus the byte span of the conclusion text it came from."""

    judgment: Judgment
    matched_span: tuple[int, int] | None
    matched_literal: str | None

    def __post_init__(self) -> None:
        if self.judgment is Judgment.UNKNOWN:
            if self.matched_span is not None or self.matched_literal is not None:
                raise ValidationError("Unknown judgment carries no match span")
        else:
            if self.matched_span is None or self.matched_literal is None:
                raise ValidationError("judged conclusions carry a match span")
            start, end = self.matched_span
            if end - start != len(self.matched_literal.encode("utf-8")):
                raise ValidationError("matched_span must delimit matched_literal")


def parse_judgment(critique_text: str, strict: bool = False) -> ParsedConclusion:
    """Extract the final verdict from a critique; total, never raises.

    The last matching conclusion in the text wins: critiques may quote
    earlier verdicts before actually concluding. ``matched_span`` holds
    UTF-8 byte offsets into ``critique_text``.
    """
    pattern = _STRICT_RE if strict else _CONCLUSION_RE
    matches = list(pattern.finditer(critique_text))
    if not matches:
        return ParsedConclusion(Judgment.UNKNOWN, None, None)
    last = matches[-1]
    verdict = last.group(1).lower()
    judgment = Judgment.CORRECT if verdict in _CORRECT_WORDS else Judgment.WRONG
    literal = last.group(0)
    byte_start = len(critique_text[: last.start()].encode("utf-8"))
    byte_end = byte_start + len(literal.encode("utf-8"))
    return ParsedConclusion(judgment, (byte_start, byte_end), literal)


@dataclass(frozen=True)
class JudgmentStats:
    n_correct: int
    n_wrong: int
    n_unknown: int
    correct_rate: float | None

    def to_dict(self) -> dict:
        return {
            "n_correct": self.n_correct,
            "n_wrong": self.n_wrong,
            "n_unknown": self.n_unknown,
            "correct_rate": self.correct_rate,
        }


def judgment_stats(records: list[CritiqueRecord]) -> JudgmentStats:
    """Partition counts plus correct-rate over judged records.

    The rate is n_correct / (n_correct + n_wrong); absent when nothing was
    judged. Unknown records never enter the rate.
    """
    n_correct = sum(1 for r in records if r.judgment is Judgment.CORRECT)
    n_wrong = sum(1 for r in records if r.judgment is Judgment.WRONG)
    n_unknown = len(records) - n_correct - n_wrong
    judged = n_correct + n_wrong
    rate = (n_correct / judged) if judged else None
    return JudgmentStats(n_correct, n_wrong, n_unknown, rate)


def reparse_record(record: CritiqueRecord, strict: bool = False) -> CritiqueRecord:
    """Record with the judgment cache rewritten from its critique text."""
    judgment = parse_judgment(record.critique_text, strict=strict).judgment
    if judgment is record.judgment:
        return record
    return CritiqueRecord(
        sample_id=record.sample_id,
        teacher_model=record.teacher_model,
        prompt_fingerprint=record.prompt_fingerprint,
        critique_text=record.critique_text,
        judgment=judgment,
        created_at=record.created_at,
    )
