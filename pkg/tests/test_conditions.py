"""Parser, evaluator, printer, and builtin tests for the edge-condition
expression language."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tutorkit.conditions import (
    And,
    Bool,
    Cmp,
    EvaluationContext,
    Not,
    Num,
    Or,
    Str,
    Var,
    builtin_condition,
    evaluate_condition,
    format_number,
    free_variables,
    is_builtin,
    parse_condition,
    print_condition,
)
from tutorkit.errors import (
    ConditionSyntaxError,
    TypeMismatch,
    UnknownBuiltin,
    UnknownVariable,
)

CTX = EvaluationContext(passed=True, score=0.75, answer="3", label="", attempts=2, kind="quiz")


# ---------------------------------------------------------------------------
# Parsing


def test_parses_simple_comparison():
    assert parse_condition("score >= 0.5") == Cmp(">=", Var("score"), Num(0.5))


def test_parses_precedence_or_over_and():
    # a && b || c && d  ==  (a && b) || (c && d)
    ast = parse_condition("a && b || c && d")
    assert ast == Or(And(Var("a"), Var("b")), And(Var("c"), Var("d")))


def test_parses_not_binds_tighter_than_and():
    assert parse_condition("!a && b") == And(Not(Var("a")), Var("b"))


def test_parses_nested_parens_and_not():
    assert parse_condition("!(a || b)") == Not(Or(Var("a"), Var("b")))


def test_parses_string_escapes():
    assert parse_condition('answer == "say \\"hi\\" \\\\ done"') == Cmp(
        "==", Var("answer"), Str('say "hi" \\ done')
    )


def test_keywords_are_literals_not_variables():
    assert parse_condition("true") == Bool(True)
    assert parse_condition("false") == Bool(False)


@pytest.mark.parametrize(
    "source",
    [
        "",
        "(",
        "a &&",
        "a || ",
        "&& a",
        "a == ",
        "1 < 2 < 3",  # comparisons are non-associative
        "a ! b",
        '"unterminated',
        "1.5.5",
        "a @ b",
        "1e5",  # no exponent numerals
        "(a || b",
    ],
)
def test_syntax_errors(source):
    with pytest.raises(ConditionSyntaxError) as exc:
        parse_condition(source)
    assert exc.value.code == "CONDITION_SYNTAX"
    assert isinstance(exc.value.position, int)
    assert exc.value.expected


def test_comparison_operands_are_atomic_terms():
    # a parenthesized expression is not a comparison operand
    with pytest.raises(ConditionSyntaxError):
        parse_condition("(a || b) == c")


def test_unknown_variable_check_is_optional():
    ast = parse_condition("mystery == 1")
    assert free_variables(ast) == {"mystery"}
    with pytest.raises(UnknownVariable):
        parse_condition("mystery == 1", variables={"passed", "score"})


# ---------------------------------------------------------------------------
# Evaluation


def test_evaluates_context_variables():
    assert evaluate_condition(parse_condition("passed"), CTX) is True
    assert evaluate_condition(parse_condition("score >= 0.5"), CTX) is True
    assert evaluate_condition(parse_condition('answer == "3"'), CTX) is True
    assert evaluate_condition(parse_condition("attempts >= 3"), CTX) is False
    assert evaluate_condition(parse_condition('kind != "quiz"'), CTX) is False


def test_string_comparison_is_lexicographic():
    assert evaluate_condition(parse_condition('answer < "4"'), CTX) is True


@pytest.mark.parametrize(
    "source",
    [
        "1 && true",          # && needs booleans
        "score || passed",    # || needs booleans
        "!score",             # ! needs a boolean
        "passed == 1",        # bool equality only against bool
        "passed < true",      # bools have no ordering
        'score == "0.75"',    # no number/string coercion
        "score",              # condition result must be boolean
        '"yes"',
        "attempts",
    ],
)
def test_strict_typing_rejects_mixed_operands(source):
    with pytest.raises(TypeMismatch) as exc:
        evaluate_condition(parse_condition(source), CTX)
    assert exc.value.code == "TYPE_MISMATCH"


def test_unknown_variable_at_evaluation():
    with pytest.raises(UnknownVariable):
        evaluate_condition(parse_condition("mystery"), CTX)


def test_short_circuit_skips_right_operand():
    # the right side would raise TypeMismatch if evaluated
    assert evaluate_condition(parse_condition("false && (1 == true)"), CTX) is False
    assert evaluate_condition(parse_condition("true || (1 == true)"), CTX) is True
    with pytest.raises(TypeMismatch):
        evaluate_condition(parse_condition("true && (1 == true)"), CTX)


def test_short_circuit_observable_via_lookup_count(monkeypatch):
    from tutorkit import conditions as mod

    lookups: list[str] = []
    original = mod._lookup

    def counting(ctx, name):
        lookups.append(name)
        return original(ctx, name)

    monkeypatch.setattr(mod, "_lookup", counting)
    evaluate_condition(parse_condition("passed || kind == \"quiz\""), CTX)
    assert lookups == ["passed"]  # left-to-right, right side skipped


def test_context_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        EvaluationContext(passed=True, score=1.5)
    with pytest.raises(ValueError):
        EvaluationContext(passed=True, score=0.5, attempts=0)


# ---------------------------------------------------------------------------
# Builtins


def test_builtin_expansions():
    assert builtin_condition("pass") == Cmp("==", Var("passed"), Bool(True))
    assert builtin_condition("fail") == Cmp("==", Var("passed"), Bool(False))
    assert builtin_condition("always") == Bool(True)
    assert builtin_condition("retry_exceeded(3)") == Cmp(">=", Var("attempts"), Num(3.0))


def test_builtin_printing():
    assert print_condition(builtin_condition("pass")) == "passed == true"
    assert print_condition(builtin_condition("retry_exceeded(2)")) == "attempts >= 2"


def test_builtin_semantics():
    passing = EvaluationContext(passed=True, score=1.0)
    failing = EvaluationContext(passed=False, score=0.0, attempts=3)
    assert evaluate_condition(builtin_condition("pass"), passing) is True
    assert evaluate_condition(builtin_condition("pass"), failing) is False
    assert evaluate_condition(builtin_condition("fail"), failing) is True
    assert evaluate_condition(builtin_condition("always"), failing) is True
    assert evaluate_condition(builtin_condition("retry_exceeded(3)"), failing) is True
    assert evaluate_condition(builtin_condition("retry_exceeded(4)"), failing) is False


def test_unknown_builtin():
    assert is_builtin("pass") and not is_builtin("perfect")
    with pytest.raises(UnknownBuiltin):
        builtin_condition("retry_exceeded(-1)")


# ---------------------------------------------------------------------------
# Printer


def test_printer_minimal_parens():
    a, b, c = Var("a"), Var("b"), Var("c")
    assert print_condition(Or(And(a, b), c)) == "a && b || c"
    assert print_condition(And(Or(a, b), c)) == "(a || b) && c"
    assert print_condition(Not(And(a, b))) == "!(a && b)"
    assert print_condition(Not(Not(a))) == "!!a"
    assert print_condition(And(a, And(b, c))) == "a && (b && c)"  # right-nesting kept
    assert print_condition(And(And(a, b), c)) == "a && b && c"


def test_number_formatting():
    assert format_number(3.0) == "3"
    assert format_number(0.5) == "0.5"
    assert format_number(1e-9) == "0.000000001"
    assert "e" not in format_number(1e16).lower()


# ---------------------------------------------------------------------------
# Property tests: round trip and truth-table oracle

_ident = st.sampled_from(["a", "b", "c", "passed", "score", "answer", "kind", "x1"])
_number = st.one_of(
    st.integers(min_value=0, max_value=10**6).map(float),
    st.integers(min_value=0, max_value=10**6).map(lambda n: n / 100),
)
_string = st.text(
    alphabet=list("abc XYZ0\"\\'!&|<>=().,"), max_size=8
)

_terms = st.one_of(
    st.booleans().map(Bool),
    _number.map(Num),
    _string.map(Str),
    _ident.map(Var),
)
_cmp = st.builds(Cmp, st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), _terms, _terms)

_ast = st.recursive(
    st.one_of(_terms, _cmp),
    lambda children: st.one_of(
        children.map(Not),
        st.builds(And, children, children),
        st.builds(Or, children, children),
    ),
    max_leaves=25,
)


@settings(max_examples=300, deadline=None)
@given(_ast)
def test_print_parse_round_trip(ast):
    assert parse_condition(print_condition(ast)) == ast


_bool_expr = st.recursive(
    st.sampled_from([Var("a"), Var("b"), Var("c"), Bool(True), Bool(False)]),
    lambda children: st.one_of(
        children.map(Not),
        st.builds(And, children, children),
        st.builds(Or, children, children),
    ),
    max_leaves=20,
)


def _substitute(ast, assignment: dict[str, bool]):
    if isinstance(ast, Var):
        return Bool(assignment[ast.name])
    if isinstance(ast, Not):
        return Not(_substitute(ast.operand, assignment))
    if isinstance(ast, And):
        return And(_substitute(ast.left, assignment), _substitute(ast.right, assignment))
    if isinstance(ast, Or):
        return Or(_substitute(ast.left, assignment), _substitute(ast.right, assignment))
    return ast


def _oracle(ast, assignment: dict[str, bool]) -> bool:
    """Independent evaluator: direct structural recursion onto Python's own
    boolean operators."""
    if isinstance(ast, Bool):
        return ast.value
    if isinstance(ast, Var):
        return assignment[ast.name]
    if isinstance(ast, Not):
        return not _oracle(ast.operand, assignment)
    if isinstance(ast, And):
        return _oracle(ast.left, assignment) and _oracle(ast.right, assignment)
    return _oracle(ast.left, assignment) or _oracle(ast.right, assignment)


@settings(max_examples=300, deadline=None)
@given(_bool_expr)
def test_truth_table_oracle(ast):
    ctx = EvaluationContext(passed=True, score=1.0)
    for bits in range(8):
        assignment = {"a": bool(bits & 1), "b": bool(bits & 2), "c": bool(bits & 4)}
        got = evaluate_condition(_substitute(ast, assignment), ctx)
        assert got == _oracle(ast, assignment)


def test_fuzz_never_crashes():
    rng = random.Random(20260823)
    alphabet = "abxy01.\"\\ ()!&|<>=_truefalspasdnk"
    for _ in range(10_000):
        source = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 65)))
        try:
            ast = parse_condition(source)
        except ConditionSyntaxError:
            continue
        # whatever parses must also print and re-parse identically
        assert parse_condition(print_condition(ast)) == ast
