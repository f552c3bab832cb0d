"""Final-answer extraction and math answer equivalence for benchmark scoring.

Equivalence runs a staged pipeline on both strings: normalization, exact
match, rational/decimal numeric comparison at relative tolerance 1e-6, then
a LaTeX-lite structural comparison (\\frac{a}{b} <-> a/b, \\sqrt{a} <->
sqrt(a), leading '+'). Multi-answer golds split on top-level commas and
compare element-wise; '±' expands to a two-element set. There is no computer
algebra: expressions beyond these forms degrade to False, which keeps
mismatches auditable.

Conventions deliberately pinned here:
  - a comma between a digit and exactly three trailing digits is digit
    grouping ("1,234" == 1234), otherwise commas separate list elements;
  - normalization lowercases except single-letter strings (choice letters
    and one-letter variables keep their case);
  - numeric tolerance is relative 1e-6, enough to absorb truncated decimal
    expansions of exact rationals and nothing else.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .types import Benchmark, EvalRecord

# Bump when extraction or equivalence rules change; recorded in manifests.
EQUIVALENCE_RULES_VERSION = "1"

_REL_TOL = Fraction(1, 10**6)


class ExtractionMethod(Enum):
    BOXED_LAST = "boxed_last"
    ANSWER_LINE_LAST = "answer_line_last"
    NONE = "none"


@dataclass(frozen=True)
class ExtractedAnswer:
    text: str
    method: ExtractionMethod


_EMPTY_EXTRACTION = ExtractedAnswer("", ExtractionMethod.NONE)
_ANSWER_LINE_RE = re.compile(r"^\s*answer\s*:\s*(.*)$", re.IGNORECASE)


def _boxed_groups(text: str) -> list[str]:
    """Contents of every balanced \\boxed{...} group, in order."""
    groups = []
    i = 0
    marker = "\\boxed{"
    while True:
        start = text.find(marker, i)
        if start < 0:
            break
        depth = 1
        j = start + len(marker)
        while j < len(text) and depth > 0:
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
            j += 1
        if depth == 0:
            groups.append(text[start + len(marker): j - 1])
            i = j
        else:
            # Unbalanced group: skip the marker, keep scanning.
            i = start + len(marker)
    return groups


def extract_answer(raw_output: str) -> ExtractedAnswer:
    """Pull the final answer out of a model response; total, never raises.

    Primary rule: the last balanced \\boxed{...} group. Fallback: the text
    after the last line beginning "Answer:". Otherwise method None.
    """
    if not raw_output:
        return _EMPTY_EXTRACTION
    boxed = _boxed_groups(raw_output)
    if boxed:
        return ExtractedAnswer(boxed[-1].strip(), ExtractionMethod.BOXED_LAST)
    for line in reversed(raw_output.splitlines()):
        m = _ANSWER_LINE_RE.match(line)
        if m:
            return ExtractedAnswer(m.group(1).strip(), ExtractionMethod.ANSWER_LINE_LAST)
    return _EMPTY_EXTRACTION


# --- normalization ----------------------------------------------------------

_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
_BRACKET_PAIRS = {"(": ")", "[": "]"}


def _strip_outer_brackets(s: str) -> str:
    """Remove one outer bracket pair when it wraps the whole string."""
    if len(s) < 2 or s[0] not in _BRACKET_PAIRS or s[-1] != _BRACKET_PAIRS[s[0]]:
        return s
    depth = 0
    for i, ch in enumerate(s):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth == 0 and i < len(s) - 1:
                return s  # outer pair closes early; not a full wrap
        if depth < 0:
            return s
    return s[1:-1] if depth == 0 else s


def normalize(s: str) -> str:
    """Canonical comparison form; idempotent."""
    s = s.strip()
    s = s.replace("\\left", "").replace("\\right", "")
    s = s.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    s = s.replace("\\!", "").replace("\\,", " ").replace("\\;", " ").replace("\\:", " ")
    s = re.sub(r"\s+", " ", s).strip()
    # Outer brackets and trailing periods can reveal each other ("(x)."), so
    # strip both to a fixpoint.
    while True:
        stripped = _strip_outer_brackets(s).strip().rstrip(".").strip()
        if stripped == s:
            break
        s = stripped
    s = _THOUSANDS_RE.sub("", s)
    if not (len(s) == 1 and s.isalpha()):
        s = s.lower()
    return s


# --- numeric stage ----------------------------------------------------------

_FRAC_RE = re.compile(r"^([+-]?)\\frac\{([+-]?\d+)\}\{([+-]?\d+)\}$")


def _as_rational(s: str) -> Fraction | None:
    s = s.replace(" ", "")
    m = _FRAC_RE.match(s)
    if m:
        sign, num, den = m.groups()
        if int(den) == 0:
            return None
        value = Fraction(int(num), int(den))
        return -value if sign == "-" else value
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        return None


def _rationals_close(a: Fraction, b: Fraction) -> bool:
    diff = abs(a - b)
    return diff == 0 or diff <= _REL_TOL * max(abs(a), abs(b))


# --- structural stage -------------------------------------------------------

def _read_brace_group(s: str, start: int) -> tuple[str, int] | None:
    """Content of the brace group opening at ``start``; None if unbalanced."""
    if start >= len(s) or s[start] != "{":
        return None
    depth = 1
    j = start + 1
    while j < len(s) and depth > 0:
        if s[j] == "{":
            depth += 1
        elif s[j] == "}":
            depth -= 1
        j += 1
    if depth != 0:
        return None
    return s[start + 1: j - 1], j


def _wrap(term: str) -> str:
    """Parenthesize only when the term has a top-level operator."""
    depth = 0
    for ch in term:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif depth == 0 and ch in "+-*/^":
            return f"({term})"
    return term


def _structural_form(s: str) -> str:
    """Whitespace-free form with \\frac and \\sqrt lowered to slash/sqrt()."""
    s = s.replace(" ", "")
    # Innermost-first so nested \frac{\sqrt{2}}{2} lowers cleanly.
    changed = True
    while changed:
        changed = False
        idx = s.find("\\frac{")
        while idx >= 0:
            first = _read_brace_group(s, idx + len("\\frac"))
            if first is None:
                break
            num, after_num = first
            second = _read_brace_group(s, after_num)
            if second is None:
                break
            den, after_den = second
            if "\\frac{" in num or "\\frac{" in den:
                idx = s.find("\\frac{", idx + 1)
                continue
            s = s[:idx] + f"{_wrap(num)}/{_wrap(den)}" + s[after_den:]
            changed = True
            idx = s.find("\\frac{")
        idx = s.find("\\sqrt{")
        while idx >= 0:
            group = _read_brace_group(s, idx + len("\\sqrt"))
            if group is None:
                break
            inner, after = group
            if "\\sqrt{" in inner or "\\frac{" in inner:
                idx = s.find("\\sqrt{", idx + 1)
                continue
            s = s[:idx] + f"sqrt({inner})" + s[after:]
            changed = True
            idx = s.find("\\sqrt{")
    return s.lstrip("+")


# --- comparison pipeline ----------------------------------------------------

def _element_equal(a: str, b: str) -> bool:
    if a == b:
        return True
    ra, rb = _as_rational(a), _as_rational(b)
    if ra is not None and rb is not None:
        return _rationals_close(ra, rb)
    return _structural_form(a) == _structural_form(b)


_PM_RE = re.compile(r"\\pm|±")


def _pm_variants(s: str) -> list[str]:
    m = _PM_RE.search(s)
    if not m:
        return [s]
    left, right = s[: m.start()].strip(), s[m.end():].strip()
    if not left:
        return [right, f"-{right}"]
    return [f"{left}+{right}", f"{left}-{right}"]


def _greedy_multiset_match(xs: list[str], ys: list[str]) -> bool:
    remaining = list(ys)
    for x in xs:
        for y in remaining:
            if _element_equal(x, y):
                remaining.remove(y)
                break
        else:
            return False
    return True


def _split_top_level(s: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in s:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append("".join(current).strip())
    return parts


def equivalent(candidate: str, gold: str) -> bool:
    """Whether two answer strings denote the same value; symmetric and total."""
    if candidate is None or gold is None:
        return False
    a, b = normalize(candidate), normalize(gold)
    if not a or not b:
        return a == b
    if _element_equal(a, b):
        return True
    # Multi-answer forms: split on top-level commas (ordered), expand ±
    # into its two-element set (unordered among the expanded elements).
    ea = [v for part in _split_top_level(a) for v in _pm_variants(part)]
    eb = [v for part in _split_top_level(b) for v in _pm_variants(part)]
    if len(ea) != len(eb):
        return False
    if len(ea) == 1:
        return _element_equal(ea[0], eb[0])
    if _PM_RE.search(a) or _PM_RE.search(b):
        return _greedy_multiset_match(ea, eb) or _greedy_multiset_match(eb, ea)
    return all(_element_equal(x, y) for x, y in zip(ea, eb))


# --- scoring ----------------------------------------------------------------

def round_half_up(value: Decimal, places: str = "0.1") -> float:
    return float(value.quantize(Decimal(places), rounding=ROUND_HALF_UP))


def score(records: Iterable[EvalRecord]) -> dict[Benchmark, float]:
    """Accuracy percentage per benchmark, one decimal, half-up rounding.

    Benchmarks with no records are absent from the map, not zero.
    """
    totals: dict[Benchmark, int] = {}
    correct: dict[Benchmark, int] = {}
    for record in records:
        totals[record.benchmark] = totals.get(record.benchmark, 0) + 1
        if record.verdict:
            correct[record.benchmark] = correct.get(record.benchmark, 0) + 1
    result = {}
    for benchmark in Benchmark:
        if benchmark not in totals:
            continue
        pct = Decimal(100 * correct.get(benchmark, 0)) / Decimal(totals[benchmark])
        result[benchmark] = round_half_up(pct)
    return result


def grade(raw_output: str, gold_answer: str) -> tuple[ExtractedAnswer, bool]:
    """Extraction plus verdict in one step; the verify command's core.

    An empty extraction never scores true (a true verdict must carry an
    extracted answer).
    """
    extracted = extract_answer(raw_output)
    if extracted.method is ExtractionMethod.NONE or not extracted.text:
        return extracted, False
    return extracted, equivalent(extracted.text, gold_answer)
