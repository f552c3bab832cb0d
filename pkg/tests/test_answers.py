import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cftforge.answers import (
    ExtractionMethod,
    equivalent,
    extract_answer,
    grade,
    normalize,
    score,
)
from cftforge.types import Benchmark, EvalRecord, InferenceStrategy, StrategyKind


class TestExtract:
    def test_boxed_last(self):
        out = extract_answer("So we count pairs and the final answer is \\boxed{16}.")
        assert out.text == "16"
        assert out.method is ExtractionMethod.BOXED_LAST

    def test_answer_line_fallback(self):
        out = extract_answer(
            "To find the derivative, apply the rule term by term.\n"
            "Answer: The derivative of a quadratic is f'(x) = 2ax + b.")
        assert out.text == "The derivative of a quadratic is f'(x) = 2ax + b."
        assert out.method is ExtractionMethod.ANSWER_LINE_LAST

    def test_nested_braces(self):
        out = extract_answer("\\boxed{\\frac{1}{2}}")
        assert out.text == "\\frac{1}{2}"
        assert out.method is ExtractionMethod.BOXED_LAST

    def test_last_boxed_wins(self):
        out = extract_answer("\\boxed{1} then \\boxed{2}")
        assert out.text == "2"

    def test_no_answer(self):
        out = extract_answer("I am not sure.")
        assert out.method is ExtractionMethod.NONE
        assert out.text == ""

    def test_unbalanced_boxed_never_reported(self):
        out = extract_answer("unfinished \\boxed{1 + (2")
        assert out.method is not ExtractionMethod.BOXED_LAST

    def test_unbalanced_then_balanced(self):
        out = extract_answer("\\boxed{oops then later \\boxed{9}")
        # The inner balanced group is the only balanced one.
        assert out.method is ExtractionMethod.BOXED_LAST
        assert out.text == "9"

    @given(st.text(max_size=200))
    def test_total_function(self, raw):
        out = extract_answer(raw)
        if out.method is ExtractionMethod.NONE:
            assert out.text == ""


class TestNormalize:
    @pytest.mark.parametrize("raw,expected", [
        ("  42  ", "42"),
        ("(16)", "16"),
        ("[7]", "7"),
        ("16.", "16"),
        ("\\left(\\frac{1}{2}\\right)", "\\frac{1}{2}"),
        ("1,000", "1000"),
        ("12,345,678", "12345678"),
        ("A", "A"),
        ("Evelyn", "evelyn"),
    ])
    def test_examples(self, raw, expected):
        assert normalize(raw) == expected

    def test_partial_brackets_not_stripped(self):
        assert normalize("(a),(b)") == "(a),(b)"

    @pytest.mark.parametrize("s", ["(a).", "((7)).", "(x.).", "[1].", "(1,000.)"])
    def test_interleaved_brackets_and_periods_reach_fixpoint(self, s):
        once = normalize(s)
        assert normalize(once) == once
        assert "(" not in once and ")" not in once

    @given(st.text(max_size=80))
    def test_idempotent(self, s):
        once = normalize(s)
        assert normalize(once) == once

    def test_idempotent_on_random_answer_shapes(self):
        rng = random.Random(0)
        pieces = ["\\frac{1}{2}", "42", "(3, 4)", "x+1", "1,000", "sqrt(2)",
                  "\\sqrt{2}", "-7", "0.5", "A", "[0, 1]", "\\pi", "2ax + b."]
        for _ in range(1000):
            s = " ".join(rng.choices(pieces, k=rng.randint(1, 4)))
            if rng.random() < 0.3:
                s = f"({s})"
            once = normalize(s)
            assert normalize(once) == once


class TestEquivalent:
    @pytest.mark.parametrize("a,b", [
        ("0.5", "\\frac{1}{2}"),
        ("2ax + b", "2ax + b"),
        ("1,000", "1000"),
        ("\\frac{1}{2}", "1/2"),
        ("\\sqrt{2}", "sqrt(2)"),
        ("+5", "5"),
        ("16", "16."),
        ("(4)", "4"),
        ("x/2", "\\frac{x}{2}"),
        ("\\frac{\\sqrt{2}}{2}", "sqrt(2)/2"),
        ("1, 2", "1,2"),
        ("(3, 4)", "(3,4)"),
        ("\\pm 2", "2, -2"),
        ("±3", "3, -3"),
        ("0.333333333333", "\\frac{1}{3}"),
        ("-\\frac{1}{2}", "-0.5"),
        ("\\frac{-1}{2}", "-0.5"),
        ("A", "A"),
    ])
    def test_equivalent_pairs(self, a, b):
        assert equivalent(a, b)
        assert equivalent(b, a)

    @pytest.mark.parametrize("a,b", [
        ("1", "16"),
        ("A", "B"),
        ("a", "A"),
        ("(1,2)", "(1,3)"),
        ("0.5", "0.6"),
        ("x+1", "x+2"),
        ("1,2", "1,2,3"),
        ("sqrt(2)", "sqrt(3)"),
    ])
    def test_non_equivalent_pairs(self, a, b):
        assert not equivalent(a, b)
        assert not equivalent(b, a)

    def test_reflexive_on_normalized_nonempty(self):
        rng = random.Random(1)
        pieces = ["\\frac{3}{7}", "42", "(3, 4)", "x+1", "99", "\\sqrt{5}", "B"]
        for _ in range(200):
            s = normalize(rng.choice(pieces))
            assert equivalent(s, s)

    @given(a=st.text(max_size=40), b=st.text(max_size=40))
    def test_symmetric_for_all_inputs(self, a, b):
        assert equivalent(a, b) == equivalent(b, a)

    def test_rational_decimal_oracle(self):
        rng = random.Random(7)
        for _ in range(500):
            q = rng.randint(1, 99)
            p = rng.randint(-999, 999)
            value = Fraction(p, q)
            decimal = f"{float(value):.12f}"
            assert equivalent(decimal, f"\\frac{{{p}}}{{{q}}}"), (p, q)

    def test_unparseable_pairs_fall_to_false(self):
        assert not equivalent("\\int_0^1 f", "42")
        assert not equivalent("", "42")


class TestScore:
    def make(self, benchmark, verdict):
        return EvalRecord(
            item_id="i", benchmark=benchmark,
            strategy=InferenceStrategy(StrategyKind.DIRECT), model="m",
            raw_output="\\boxed{1}", extracted_answer="1", verdict=verdict,
            num_model_calls=1)

    def test_three_of_four(self):
        records = [self.make(Benchmark.MATH, v) for v in (True, True, True, False)]
        assert score(records) == {Benchmark.MATH: 75.0}

    def test_empty_group_absent(self):
        assert score([]) == {}

    def test_half_up_rounding(self):
        # 1 of 16 = 6.25 -> 6.3 under half-up (floats would give 6.2).
        records = [self.make(Benchmark.GSM8K, i == 0) for i in range(16)]
        assert score(records) == {Benchmark.GSM8K: 6.3}

    def test_recomputed_verdicts_match_stored(self):
        raws = [("the final answer is \\boxed{4}", "4", True),
                ("the final answer is \\boxed{5}", "4", False),
                ("Answer: 1/2", "\\frac{1}{2}", True)]
        for raw, gold, expected in raws:
            extracted, verdict = grade(raw, gold)
            assert verdict is expected

    def test_empty_extraction_never_scores_true(self):
        # An empty boxed group cannot satisfy any gold, even degenerate ones.
        extracted, verdict = grade("here: \\boxed{}", ".")
        assert verdict is False
        extracted, verdict = grade("Answer:", "4")
        assert verdict is False
