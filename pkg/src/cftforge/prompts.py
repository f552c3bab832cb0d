"""Prompt templates for critique generation, reference answers, and inference.

Templates live as verbatim text assets under ``templates/`` (one per kind,
trailing newline stripped on load). Question and solution are interpolated
raw: no escaping, no reflowing, because any normalization would change
teacher behavior. The reference-answer template intentionally keeps its
unbalanced quote after "Answer:" as shipped.
"""
from __future__ import annotations

import hashlib
import re
from enum import Enum
from importlib import resources

from .errors import UsageError

# Bump when any template asset changes; recorded in run manifests.
TEMPLATE_VERSION = "1"

_QUESTION_SLOT = "{question}"
_SOLUTION_SLOT = "{solution}"


class PromptKind(Enum):
    CRITIQUE_TEACHER = "critique_teacher"
    REFERENCE_ANSWER = "reference_answer"
    DIRECT_INFERENCE = "direct_inference"
    SINGLE_PASS_SELF_CRITIQUE = "single_pass_self_critique"
    TWO_STAGE_SOLVE = "two_stage_solve"
    TWO_STAGE_CRITIQUE = "two_stage_critique"


# Kinds whose template embeds a solution next to the question.
SOLUTION_KINDS = frozenset({PromptKind.CRITIQUE_TEACHER, PromptKind.TWO_STAGE_CRITIQUE})

_cache: dict[PromptKind, str] = {}


def template_text(kind: PromptKind) -> str:
    """Raw template for ``kind`` with placeholder slots intact."""
    if kind not in _cache:
        text = (resources.files(__package__) / "templates" / f"{kind.value}.txt").read_text(
            encoding="utf-8")
        if text.endswith("\n"):
            text = text[:-1]
        _cache[kind] = text
    return _cache[kind]


_SLOT_RE = re.compile(r"\{question\}|\{solution\}")


def render(kind: PromptKind, question: str, solution: str | None = None) -> str:
    """Render the template for ``kind`` around the given question.

    ``solution`` is required for the kinds that critique an existing answer
    and forbidden otherwise. Substitution is a single pass over the template
    so slot-shaped text inside a question or solution is never re-expanded.
    """
    needs_solution = kind in SOLUTION_KINDS
    if needs_solution and solution is None:
        raise UsageError(f"{kind.value} requires a solution argument")
    if not needs_solution and solution is not None:
        raise UsageError(f"{kind.value} does not take a solution argument")

    def fill(match: re.Match) -> str:
        return question if match.group(0) == _QUESTION_SLOT else solution  # type: ignore[return-value]

    return _SLOT_RE.sub(fill, template_text(kind))


def fingerprint(kind: PromptKind, question: str, solution: str | None = None) -> str:
    """sha256 of the rendered prompt; used as CritiqueRecord.prompt_fingerprint."""
    return hashlib.sha256(render(kind, question, solution).encode("utf-8")).hexdigest()


def dump_prompts() -> str:
    """All templates concatenated with headers, for audit."""
    parts = []
    for kind in PromptKind:
        parts.append(f"=== {kind.value} ===")
        parts.append(template_text(kind))
        parts.append("")
    return "\n".join(parts)
