"""Edge-condition expression language: lexer, parser, evaluator, printer.

Grammar (EBNF):

    cond       := or
    or         := and ("||" and)*
    and        := unary ("&&" unary)*
    unary      := "!" unary | primary
    primary    := "(" cond ")" | comparison | term
    comparison := term op term
    op         := "==" | "!=" | "<" | "<=" | ">" | ">="
    term       := IDENT | NUMBER | STRING | "true" | "false"

Whitespace is insignificant between tokens.  Numbers are decimal with an
optional fraction (no exponent form).  Strings are double-quoted with
backslash escapes for `"` and `\\`.  Comparisons are non-associative and
their operands are atomic terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import (
    ConditionSyntaxError,
    TypeMismatch,
    UnknownBuiltin,
    UnknownVariable,
)

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "ConditionAst"


@dataclass(frozen=True)
class And:
    left: "ConditionAst"
    right: "ConditionAst"


@dataclass(frozen=True)
class Or:
    left: "ConditionAst"
    right: "ConditionAst"


@dataclass(frozen=True)
class Cmp:
    op: str  # one of == != < <= > >=
    left: "ConditionAst"  # atomic term
    right: "ConditionAst"  # atomic term


ConditionAst = Bool | Num | Str | Var | Not | And | Or | Cmp

_TERM_TYPES = (Bool, Num, Str, Var)
_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")

# The facts an edge condition may read, with their value types.
CONTEXT_VARIABLES = {
    "passed": bool,
    "score": float,
    "answer": str,
    "label": str,
    "attempts": float,
    "kind": str,
}


@dataclass(frozen=True)
class EvaluationContext:
    """The submission facts a condition is evaluated against."""

    passed: bool
    score: float
    answer: str = ""
    label: str = ""
    attempts: int = 1
    kind: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0,1], got {self.score}")
        if self.attempts < 1:
            raise ValueError(f"attempts must be >= 1, got {self.attempts}")


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\["\\]|[^"\\])*")
  | (?P<op>\|\||&&|==|!=|<=|>=|<|>|!|\(|\))
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | string | op | end
    text: str
    pos: int


def _lex(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ConditionSyntaxError(pos, "a valid token")
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


def _unescape(text: str) -> str:
    return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _escape(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, source: str):
        self.tokens = _lex(source)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect_op(self, text: str):
        if self.cur.kind == "op" and self.cur.text == text:
            return self.advance()
        raise ConditionSyntaxError(self.cur.pos, repr(text))

    def parse(self) -> ConditionAst:
        ast = self.parse_or()
        if self.cur.kind != "end":
            raise ConditionSyntaxError(self.cur.pos, "end of input")
        return ast

    def parse_or(self) -> ConditionAst:
        node = self.parse_and()
        while self.cur.kind == "op" and self.cur.text == "||":
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> ConditionAst:
        node = self.parse_unary()
        while self.cur.kind == "op" and self.cur.text == "&&":
            self.advance()
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self) -> ConditionAst:
        if self.cur.kind == "op" and self.cur.text == "!":
            self.advance()
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> ConditionAst:
        if self.cur.kind == "op" and self.cur.text == "(":
            self.advance()
            node = self.parse_or()
            self.expect_op(")")
            return node
        left = self.parse_term()
        if self.cur.kind == "op" and self.cur.text in _CMP_OPS:
            op = self.advance().text
            right = self.parse_term()
            # non-associative: a second comparison operator is a syntax error
            if self.cur.kind == "op" and self.cur.text in _CMP_OPS:
                raise ConditionSyntaxError(self.cur.pos, "no further comparison")
            return Cmp(op, left, right)
        return left

    def parse_term(self) -> ConditionAst:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "string":
            self.advance()
            return Str(_unescape(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "true":
                return Bool(True)
            if tok.text == "false":
                return Bool(False)
            return Var(tok.text)
        raise ConditionSyntaxError(tok.pos, "a term")


def parse_condition(source: str, variables: set[str] | None = None) -> ConditionAst:
    """Parse an edge condition; optionally check variable references."""
    ast = _Parser(source).parse()
    if variables is not None:
        unknown = free_variables(ast) - variables
        if unknown:
            raise UnknownVariable(f"unknown variables: {sorted(unknown)}")
    return ast


def free_variables(ast: ConditionAst) -> set[str]:
    if isinstance(ast, Var):
        return {ast.name}
    if isinstance(ast, Not):
        return free_variables(ast.operand)
    if isinstance(ast, (And, Or, Cmp)):
        return free_variables(ast.left) | free_variables(ast.right)
    return set()


# ---------------------------------------------------------------------------
# Evaluator


def _is_bool(v) -> bool:
    return isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _lookup(ctx: EvaluationContext, name: str):
    if name not in CONTEXT_VARIABLES:
        raise UnknownVariable(f"unknown variable: {name}")
    value = getattr(ctx, name)
    if name == "attempts":
        return float(value)
    return value


def evaluate_condition(ast: ConditionAst, ctx: EvaluationContext) -> bool:
    """Strictly typed evaluation; `&&`/`||` short-circuit left to right."""
    result = _eval(ast, ctx)
    if not _is_bool(result):
        raise TypeMismatch("condition", (type(result).__name__,))
    return result


def _eval(ast: ConditionAst, ctx: EvaluationContext):
    if isinstance(ast, (Bool, Num, Str)):
        return ast.value
    if isinstance(ast, Var):
        return _lookup(ctx, ast.name)
    if isinstance(ast, Not):
        v = _eval(ast.operand, ctx)
        if not _is_bool(v):
            raise TypeMismatch("!", (type(v).__name__,))
        return not v
    if isinstance(ast, And):
        left = _eval(ast.left, ctx)
        if not _is_bool(left):
            raise TypeMismatch("&&", (type(left).__name__,))
        if not left:
            return False
        right = _eval(ast.right, ctx)
        if not _is_bool(right):
            raise TypeMismatch("&&", (type(right).__name__,))
        return right
    if isinstance(ast, Or):
        left = _eval(ast.left, ctx)
        if not _is_bool(left):
            raise TypeMismatch("||", (type(left).__name__,))
        if left:
            return True
        right = _eval(ast.right, ctx)
        if not _is_bool(right):
            raise TypeMismatch("||", (type(right).__name__,))
        return right
    if isinstance(ast, Cmp):
        return _eval_cmp(ast, ctx)
    raise TypeError(f"not a condition AST node: {ast!r}")


def _eval_cmp(ast: Cmp, ctx: EvaluationContext) -> bool:
    left = _eval(ast.left, ctx)
    right = _eval(ast.right, ctx)
    types = (type(left).__name__, type(right).__name__)
    if _is_bool(left) or _is_bool(right):
        # booleans support equality only, and only against booleans
        if ast.op in ("==", "!=") and _is_bool(left) and _is_bool(right):
            return (left == right) if ast.op == "==" else (left != right)
        raise TypeMismatch(ast.op, types)
    if _is_num(left) and _is_num(right):
        pass
    elif isinstance(left, str) and isinstance(right, str):
        pass
    else:
        raise TypeMismatch(ast.op, types)
    if ast.op == "==":
        return left == right
    if ast.op == "!=":
        return left != right
    if ast.op == "<":
        return left < right
    if ast.op == "<=":
        return left <= right
    if ast.op == ">":
        return left > right
    return left >= right


# ---------------------------------------------------------------------------
# Builtins

_RETRY_RE = re.compile(r"^retry_exceeded\((\d+)\)$")


def builtin_condition(name: str) -> ConditionAst:
    """Expand a builtin abbreviation (pass/fail/always/retry_exceeded(n))."""
    if name == "pass":
        return Cmp("==", Var("passed"), Bool(True))
    if name == "fail":
        return Cmp("==", Var("passed"), Bool(False))
    if name == "always":
        return Bool(True)
    m = _RETRY_RE.match(name)
    if m:
        return Cmp(">=", Var("attempts"), Num(float(m.group(1))))
    raise UnknownBuiltin(f"unknown builtin condition: {name!r}")


def is_builtin(name: str) -> bool:
    try:
        builtin_condition(name)
    except UnknownBuiltin:
        return False
    return True


# ---------------------------------------------------------------------------
# Printer

_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ATOM = 5


def _prec(ast: ConditionAst) -> int:
    if isinstance(ast, Or):
        return _PREC_OR
    if isinstance(ast, And):
        return _PREC_AND
    if isinstance(ast, Not):
        return _PREC_NOT
    if isinstance(ast, Cmp):
        return _PREC_CMP
    return _PREC_ATOM


def format_number(value: float) -> str:
    """Canonical decimal rendering; no exponent, no trailing-zero drift."""
    if value == int(value):
        return str(int(value))
    text = repr(float(value))
    if "e" in text or "E" in text:
        text = format(value, ".17f").rstrip("0")
    return text


def print_condition(ast: ConditionAst) -> str:
    """Render with minimal parentheses; parse(print(a)) == a structurally."""
    if isinstance(ast, Bool):
        return "true" if ast.value else "false"
    if isinstance(ast, Num):
        return format_number(ast.value)
    if isinstance(ast, Str):
        return _escape(ast.value)
    if isinstance(ast, Var):
        return ast.name
    if isinstance(ast, Not):
        inner = print_condition(ast.operand)
        if _prec(ast.operand) < _PREC_NOT:
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(ast, Cmp):
        return f"{print_condition(ast.left)} {ast.op} {print_condition(ast.right)}"
    op, prec = ("&&", _PREC_AND) if isinstance(ast, And) else ("||", _PREC_OR)
    left = print_condition(ast.left)
    if _prec(ast.left) < prec:
        left = f"({left})"
    right = print_condition(ast.right)
    if _prec(ast.right) <= prec:
        right = f"({right})"
    return f"{left} {op} {right}"
