"""Learning-fragment graph model, canonical JSON format, and validation.

A fragment is a directed graph of typed activities with an ordered list of
condition-guarded edges.  Edge list order is the evaluation priority for
edges sharing a source.  The canonical on-disk form is UTF-8 JSON with
sorted object keys and 2-space indentation, so serializing the same
fragment twice yields byte-identical output.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from enum import Enum

from . import conditions
from .errors import (
    ConditionSyntaxError,
    MalformedDocument,
    SchemaViolation,
    UnknownBuiltin,
    UnknownNode,
)

# Modalities in engine preference order (also used for deterministic
# representation choice at render time).
MODALITIES = ("text", "rich", "code", "audio")

DEFAULT_PASS_THRESHOLD = 0.6
DEFAULT_COST = 1.0
DEFAULT_NUMERIC_TOLERANCE = 1e-9
DEFAULT_BRANCH_KEYWORDS = ["if", "else", "for", "while", "case", "&&", "||", "catch"]

# Variables edge conditions may reference.
CONTEXT_VARS = frozenset(conditions.CONTEXT_VARIABLES)


class Kind(str, Enum):
    LESSON = "lesson"
    CLOSE_ENDED = "close_ended"
    QUIZ = "quiz"
    CODING = "coding"
    ABSTRACT = "abstract"


CONCRETE_KINDS = frozenset(k.value for k in Kind if k is not Kind.ABSTRACT)


# ---------------------------------------------------------------------------
# Answer normalization

_WS_RE = re.compile(r"\s+")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


def normalize_answer(raw: str) -> str:
    """Trim, lowercase, collapse internal whitespace runs to one space."""
    return _WS_RE.sub(" ", raw.strip()).lower()


def answers_match(expected: str, answer: str, tolerance: float = DEFAULT_NUMERIC_TOLERANCE) -> bool:
    """Compare normalized answers; numerically when both parse as decimals."""
    a, b = normalize_answer(expected), normalize_answer(answer)
    if _DECIMAL_RE.match(a) and _DECIMAL_RE.match(b):
        return abs(float(a) - float(b)) <= tolerance
    return a == b


# ---------------------------------------------------------------------------
# Kind data


@dataclass(frozen=True)
class LessonData:
    """Lessons carry no grading data; content lives in the representations."""


@dataclass(frozen=True)
class ExpectedAnswer:
    text: str | None = None
    value: float | None = None
    tolerance: float = DEFAULT_NUMERIC_TOLERANCE

    def matches(self, answer: str) -> bool:
        if self.value is not None:
            normalized = normalize_answer(answer)
            if _DECIMAL_RE.match(normalized):
                return abs(float(normalized) - self.value) <= self.tolerance
            return False
        return answers_match(self.text or "", answer, self.tolerance)

    def as_text(self) -> str:
        if self.value is not None:
            return conditions.format_number(self.value)
        return self.text or ""


@dataclass(frozen=True)
class CloseEndedData:
    prompt: str
    expected: ExpectedAnswer
    distractors: dict[str, str] = field(default_factory=dict)  # normalized answer -> label


@dataclass(frozen=True)
class QuizItem:
    stem: str
    choices: tuple[str, ...]
    correct: int


@dataclass(frozen=True)
class QuizData:
    items: tuple[QuizItem, ...]
    pass_threshold: float = DEFAULT_PASS_THRESHOLD


@dataclass(frozen=True)
class TestVector:
    input: str
    expected_output: str


@dataclass(frozen=True)
class GraderSpec:
    required_tokens: tuple[str, ...] = ()
    forbidden_tokens: tuple[str, ...] = ()
    complexity_max: int | None = None
    branch_keywords: tuple[str, ...] = tuple(DEFAULT_BRANCH_KEYWORDS)
    test_vectors: tuple[TestVector, ...] = ()


@dataclass(frozen=True)
class CodingData:
    statement: str
    grader: GraderSpec


@dataclass(frozen=True)
class AbstractConstraints:
    max_nodes: int | None = None
    allowed_kinds: frozenset[str] | None = None
    required_modality: str | None = None


@dataclass(frozen=True)
class AbstractData:
    goal: frozenset[str]
    constraints: AbstractConstraints = AbstractConstraints()


KIND_DATA_TYPES = {
    Kind.LESSON: LessonData,
    Kind.CLOSE_ENDED: CloseEndedData,
    Kind.QUIZ: QuizData,
    Kind.CODING: CodingData,
    Kind.ABSTRACT: AbstractData,
}


# ---------------------------------------------------------------------------
# Nodes, edges, fragments


@dataclass(frozen=True)
class ActivityNode:
    id: str
    kind: Kind
    title: str
    representations: dict[str, str]  # modality -> opaque payload
    kind_data: LessonData | CloseEndedData | QuizData | CodingData | AbstractData
    max_attempts: int | None = None  # None = unlimited


@functools.lru_cache(maxsize=4096)
def _compile_condition(builtin: str | None, expr: str | None) -> "conditions.ConditionAst":
    # ASTs are immutable, so sharing compiled conditions across specs is safe
    if builtin is not None:
        return conditions.builtin_condition(builtin)
    return conditions.parse_condition(expr or "")


@dataclass(frozen=True)
class ConditionSpec:
    """Either a builtin name or free expression source; exactly one is set."""

    builtin: str | None = None
    expr: str | None = None

    def source(self) -> str:
        if self.builtin is not None:
            return self.builtin
        return self.expr or ""

    def compile(self) -> conditions.ConditionAst:
        return _compile_condition(self.builtin, self.expr)


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    condition: ConditionSpec
    label: str | None = None


@dataclass(frozen=True)
class LearningFragment:
    id: str
    title: str
    version: int
    entry: str
    nodes: dict[str, ActivityNode]
    edges: tuple[Edge, ...]
    provides: frozenset[str] = frozenset()
    requires: frozenset[str] = frozenset()
    cost: float = DEFAULT_COST

    def outgoing(self, node_id: str) -> list[Edge]:
        if node_id not in self.nodes:
            raise UnknownNode(f"unknown node: {node_id!r}")
        return [e for e in self.edges if e.source == node_id]

    def exit_nodes(self) -> list[str]:
        sources = {e.source for e in self.edges}
        return [nid for nid in self.nodes if nid not in sources]

    def abstract_nodes(self) -> list[str]:
        return [nid for nid, n in self.nodes.items() if n.kind is Kind.ABSTRACT]

    def kind_histogram(self) -> dict[str, int]:
        hist: dict[str, int] = {}
        for node in self.nodes.values():
            hist[node.kind.value] = hist.get(node.kind.value, 0) + 1
        return hist


def outgoing_edges(fragment: LearningFragment, node_id: str) -> list[Edge]:
    """Edges with the given source, in declared (priority) order."""
    return fragment.outgoing(node_id)


# ---------------------------------------------------------------------------
# Canonical document format

_canon = dict(sort_keys=True, indent=2, ensure_ascii=False, separators=(",", ": "))


def canonical_json(obj) -> bytes:
    return (json.dumps(obj, **_canon) + "\n").encode("utf-8")


def _require(doc: dict, key: str, types, where: str):
    if key not in doc:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, types):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    return value


def _opt(doc: dict, key: str, types, default, where: str):
    if key not in doc or doc[key] is None:
        return default
    value = doc[key]
    if not isinstance(value, types):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    return value


def _number(doc: dict, key: str, where: str, default=None, required=False):
    if required:
        value = _require(doc, key, (int, float), where)
    else:
        value = _opt(doc, key, (int, float), default, where)
    if isinstance(value, bool):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    return value


def _parse_expected(raw, where: str) -> ExpectedAnswer:
    if isinstance(raw, str):
        return ExpectedAnswer(text=raw)
    if isinstance(raw, dict):
        value = _number(raw, "value", where, required=True)
        tolerance = _number(raw, "tolerance", where, default=DEFAULT_NUMERIC_TOLERANCE)
        return ExpectedAnswer(value=float(value), tolerance=float(tolerance))
    raise SchemaViolation(f"{where}: expected must be a string or {{value, tolerance}}")


def _parse_kind_data(kind: Kind, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise SchemaViolation(f"{where}: kind_data must be an object")
    if kind is Kind.LESSON:
        return LessonData()
    if kind is Kind.CLOSE_ENDED:
        prompt = _require(raw, "prompt", str, where)
        expected = _parse_expected(_require(raw, "expected", (str, dict), where), where)
        distractors = _opt(raw, "distractors", dict, {}, where)
        for k, v in distractors.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise SchemaViolation(f"{where}: distractors must map strings to strings")
        return CloseEndedData(prompt=prompt, expected=expected, distractors=dict(distractors))
    if kind is Kind.QUIZ:
        raw_items = _require(raw, "items", list, where)
        items = []
        for i, item in enumerate(raw_items):
            iwhere = f"{where}.items[{i}]"
            if not isinstance(item, dict):
                raise SchemaViolation(f"{iwhere}: must be an object")
            stem = _require(item, "stem", str, iwhere)
            choices = _require(item, "choices", list, iwhere)
            if not all(isinstance(c, str) for c in choices):
                raise SchemaViolation(f"{iwhere}: choices must be strings")
            correct = _require(item, "correct", int, iwhere)
            if isinstance(correct, bool):
                raise SchemaViolation(f"{iwhere}: correct must be an integer")
            items.append(QuizItem(stem=stem, choices=tuple(choices), correct=correct))
        threshold = _number(raw, "pass_threshold", where, default=DEFAULT_PASS_THRESHOLD)
        return QuizData(items=tuple(items), pass_threshold=float(threshold))
    if kind is Kind.CODING:
        statement = _require(raw, "statement", str, where)
        g = _opt(raw, "grader", dict, {}, where)
        for key in ("required_tokens", "forbidden_tokens", "branch_keywords"):
            val = g.get(key, [])
            if not isinstance(val, list) or not all(isinstance(t, str) for t in val):
                raise SchemaViolation(f"{where}: grader.{key} must be a list of strings")
        cmax = g.get("complexity_max")
        if cmax is not None and (not isinstance(cmax, int) or isinstance(cmax, bool)):
            raise SchemaViolation(f"{where}: grader.complexity_max must be an integer")
        vectors = []
        for i, v in enumerate(g.get("test_vectors", [])):
            vwhere = f"{where}.grader.test_vectors[{i}]"
            if not isinstance(v, dict):
                raise SchemaViolation(f"{vwhere}: must be an object")
            vectors.append(
                TestVector(
                    input=_require(v, "input", str, vwhere),
                    expected_output=_require(v, "expected_output", str, vwhere),
                )
            )
        grader = GraderSpec(
            required_tokens=tuple(g.get("required_tokens", [])),
            forbidden_tokens=tuple(g.get("forbidden_tokens", [])),
            complexity_max=cmax,
            branch_keywords=tuple(g.get("branch_keywords", DEFAULT_BRANCH_KEYWORDS)),
            test_vectors=tuple(vectors),
        )
        return CodingData(statement=statement, grader=grader)
    # abstract
    goal = _require(raw, "goal", list, where)
    if not all(isinstance(c, str) for c in goal):
        raise SchemaViolation(f"{where}: goal must be a list of strings")
    c = _opt(raw, "constraints", dict, {}, where)
    allowed = c.get("allowed_kinds")
    if allowed is not None:
        if not isinstance(allowed, list) or not all(isinstance(k, str) for k in allowed):
            raise SchemaViolation(f"{where}: constraints.allowed_kinds must be a list")
        allowed = frozenset(allowed)
    constraints = AbstractConstraints(
        max_nodes=c.get("max_nodes"),
        allowed_kinds=allowed,
        required_modality=c.get("required_modality"),
    )
    return AbstractData(goal=frozenset(goal), constraints=constraints)


def _parse_condition_spec(raw, where: str) -> ConditionSpec:
    if not isinstance(raw, dict):
        raise SchemaViolation(f"{where}: condition must be an object")
    has_builtin = isinstance(raw.get("builtin"), str)
    has_expr = isinstance(raw.get("expr"), str)
    if has_builtin == has_expr:
        raise SchemaViolation(f"{where}: condition needs exactly one of builtin/expr")
    return ConditionSpec(builtin=raw.get("builtin"), expr=raw.get("expr"))


def _parse_node(raw: dict, where: str) -> ActivityNode:
    node_id = _require(raw, "id", str, where)
    kind_name = _require(raw, "kind", str, where)
    try:
        kind = Kind(kind_name)
    except ValueError:
        raise SchemaViolation(f"{where}: unknown kind {kind_name!r}")
    title = _require(raw, "title", str, where)
    reps = _opt(raw, "representations", dict, {}, where)
    for m, payload in reps.items():
        if m not in MODALITIES:
            raise SchemaViolation(f"{where}: unknown modality {m!r}")
        if not isinstance(payload, str):
            raise SchemaViolation(f"{where}: representation payloads must be strings")
    max_attempts = raw.get("max_attempts")
    if max_attempts is not None and (not isinstance(max_attempts, int) or isinstance(max_attempts, bool)):
        raise SchemaViolation(f"{where}: max_attempts must be an integer or null")
    kind_data = _parse_kind_data(kind, _opt(raw, "kind_data", dict, {}, where), where)
    return ActivityNode(
        id=node_id,
        kind=kind,
        title=title,
        representations=dict(reps),
        kind_data=kind_data,
        max_attempts=max_attempts,
    )


def fragment_from_dict(doc: dict) -> LearningFragment:
    if not isinstance(doc, dict):
        raise SchemaViolation("document root must be an object")
    frag_id = _require(doc, "id", str, "fragment")
    title = _require(doc, "title", str, "fragment")
    version = _require(doc, "version", int, "fragment")
    if isinstance(version, bool):
        raise SchemaViolation("fragment: version must be an integer")
    entry = _require(doc, "entry", str, "fragment")
    raw_nodes = _require(doc, "nodes", list, "fragment")
    if not raw_nodes:
        raise SchemaViolation("fragment: nodes must be non-empty")
    nodes: dict[str, ActivityNode] = {}
    for i, raw in enumerate(raw_nodes):
        if not isinstance(raw, dict):
            raise SchemaViolation(f"nodes[{i}]: must be an object")
        node = _parse_node(raw, f"nodes[{i}]")
        if node.id in nodes:
            raise SchemaViolation(f"duplicate node id {node.id!r}")
        nodes[node.id] = node
    raw_edges = _opt(doc, "edges", list, [], "fragment")
    edges: list[Edge] = []
    seen_edge_ids: set[str] = set()
    for i, raw in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(f"{where}: must be an object")
        edge = Edge(
            id=_require(raw, "id", str, where),
            source=_require(raw, "source", str, where),
            target=_require(raw, "target", str, where),
            condition=_parse_condition_spec(_require(raw, "condition", dict, where), where),
            label=_opt(raw, "label", str, None, where),
        )
        if edge.id in seen_edge_ids:
            raise SchemaViolation(f"duplicate edge id {edge.id!r}")
        seen_edge_ids.add(edge.id)
        edges.append(edge)
    provides = _opt(doc, "provides", list, [], "fragment")
    requires = _opt(doc, "requires", list, [], "fragment")
    if not all(isinstance(c, str) for c in provides + requires):
        raise SchemaViolation("fragment: provides/requires must be lists of strings")
    cost = _number(doc, "cost", "fragment", default=DEFAULT_COST)
    return LearningFragment(
        id=frag_id,
        title=title,
        version=version,
        entry=entry,
        nodes=nodes,
        edges=tuple(edges),
        provides=frozenset(provides),
        requires=frozenset(requires),
        cost=float(cost),
    )


def load_fragment(document: bytes | str) -> LearningFragment:
    """Parse a canonical-format document into a fragment."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(str(exc)) from exc
    return fragment_from_dict(doc)


def _expected_to_dict(expected: ExpectedAnswer):
    if expected.value is not None:
        return {"value": expected.value, "tolerance": expected.tolerance}
    return expected.text or ""


def _kind_data_to_dict(data) -> dict:
    if isinstance(data, LessonData):
        return {}
    if isinstance(data, CloseEndedData):
        return {
            "prompt": data.prompt,
            "expected": _expected_to_dict(data.expected),
            "distractors": dict(data.distractors),
        }
    if isinstance(data, QuizData):
        return {
            "items": [
                {"stem": it.stem, "choices": list(it.choices), "correct": it.correct}
                for it in data.items
            ],
            "pass_threshold": data.pass_threshold,
        }
    if isinstance(data, CodingData):
        return {
            "statement": data.statement,
            "grader": {
                "required_tokens": list(data.grader.required_tokens),
                "forbidden_tokens": list(data.grader.forbidden_tokens),
                "complexity_max": data.grader.complexity_max,
                "branch_keywords": list(data.grader.branch_keywords),
                "test_vectors": [
                    {"input": v.input, "expected_output": v.expected_output}
                    for v in data.grader.test_vectors
                ],
            },
        }
    # abstract
    constraints = {
        "max_nodes": data.constraints.max_nodes,
        "allowed_kinds": sorted(data.constraints.allowed_kinds)
        if data.constraints.allowed_kinds is not None
        else None,
        "required_modality": data.constraints.required_modality,
    }
    return {"goal": sorted(data.goal), "constraints": constraints}


def _node_to_dict(node: ActivityNode) -> dict:
    return {
        "id": node.id,
        "kind": node.kind.value,
        "title": node.title,
        "representations": dict(node.representations),
        "max_attempts": node.max_attempts,
        "kind_data": _kind_data_to_dict(node.kind_data),
    }


def _condition_to_dict(spec: ConditionSpec) -> dict:
    if spec.builtin is not None:
        return {"builtin": spec.builtin}
    return {"expr": spec.expr}


def fragment_to_dict(fragment: LearningFragment) -> dict:
    return {
        "id": fragment.id,
        "title": fragment.title,
        "version": fragment.version,
        "entry": fragment.entry,
        "provides": sorted(fragment.provides),
        "requires": sorted(fragment.requires),
        "cost": fragment.cost,
        "nodes": [_node_to_dict(n) for n in fragment.nodes.values()],
        "edges": [
            {
                "id": e.id,
                "source": e.source,
                "target": e.target,
                "condition": _condition_to_dict(e.condition),
                "label": e.label,
            }
            for e in fragment.edges
        ],
    }


def serialize_fragment(fragment: LearningFragment) -> bytes:
    """Canonical bytes; load_fragment(serialize_fragment(f)) == f."""
    return canonical_json(fragment_to_dict(fragment))


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    where: str  # node or edge id, or "fragment"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationIssue, ...] = ()
    warnings: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        def items(seq):
            return [{"code": i.code, "where": i.where, "message": i.message} for i in seq]

        return {"errors": items(self.errors), "warnings": items(self.warnings), "ok": self.ok}


# stable error codes
ENTRY_NOT_FOUND = "ENTRY_NOT_FOUND"
BAD_VERSION = "BAD_VERSION"
NONPOSITIVE_COST = "NONPOSITIVE_COST"
DANGLING_EDGE = "DANGLING_EDGE"
KIND_DATA_MISMATCH = "KIND_DATA_MISMATCH"
CONDITION_SYNTAX = "CONDITION_SYNTAX"
UNKNOWN_BUILTIN = "UNKNOWN_BUILTIN"
UNKNOWN_VARIABLE = "UNKNOWN_VARIABLE"
NO_REPRESENTATION = "NO_REPRESENTATION"
ABSTRACT_HAS_REPRESENTATION = "ABSTRACT_HAS_REPRESENTATION"
BAD_MAX_ATTEMPTS = "BAD_MAX_ATTEMPTS"
EMPTY_QUIZ = "EMPTY_QUIZ"
EMPTY_CHOICES = "EMPTY_CHOICES"
QUIZ_INDEX_OUT_OF_RANGE = "QUIZ_INDEX_OUT_OF_RANGE"
BAD_PASS_THRESHOLD = "BAD_PASS_THRESHOLD"
DUPLICATE_DISTRACTOR = "DUPLICATE_DISTRACTOR"
DISTRACTOR_MATCHES_EXPECTED = "DISTRACTOR_MATCHES_EXPECTED"
NEGATIVE_TOLERANCE = "NEGATIVE_TOLERANCE"
BAD_COMPLEXITY_MAX = "BAD_COMPLEXITY_MAX"
EMPTY_GOAL = "EMPTY_GOAL"
BAD_CONSTRAINT = "BAD_CONSTRAINT"
UNREACHABLE_NODE = "UNREACHABLE_NODE"
NO_REACHABLE_EXIT = "NO_REACHABLE_EXIT"
TRAPPED_CYCLE = "TRAPPED_CYCLE"


def _validate_node(node: ActivityNode, err):
    if node.kind is Kind.ABSTRACT:
        if node.representations:
            err(ABSTRACT_HAS_REPRESENTATION, node.id, "abstract nodes carry no representations")
    elif not node.representations:
        err(NO_REPRESENTATION, node.id, "concrete nodes need at least one representation")
    if node.max_attempts is not None and node.max_attempts < 1:
        err(BAD_MAX_ATTEMPTS, node.id, "max_attempts must be >= 1 or unlimited")
    data = node.kind_data
    if not isinstance(data, KIND_DATA_TYPES[node.kind]):
        # unreachable through load_fragment, but checkable on hand-built graphs
        err(KIND_DATA_MISMATCH, node.id, "kind_data variant does not match kind")
        return
    if isinstance(data, CloseEndedData):
        if data.expected.tolerance < 0:
            err(NEGATIVE_TOLERANCE, node.id, "tolerance must be >= 0")
        seen: list[str] = []
        for answer, _label in data.distractors.items():
            norm = normalize_answer(answer)
            if any(answers_match(norm, prev) for prev in seen):
                err(DUPLICATE_DISTRACTOR, node.id, f"distractor {answer!r} duplicates another")
            seen.append(norm)
            if data.expected.matches(answer):
                err(DISTRACTOR_MATCHES_EXPECTED, node.id, f"distractor {answer!r} equals the expected answer")
    elif isinstance(data, QuizData):
        if not data.items:
            err(EMPTY_QUIZ, node.id, "quiz needs at least one item")
        for i, item in enumerate(data.items):
            if not item.choices:
                err(EMPTY_CHOICES, node.id, f"item {i} has no choices")
            elif not 0 <= item.correct < len(item.choices):
                err(QUIZ_INDEX_OUT_OF_RANGE, node.id, f"item {i} correct index out of range")
        if not 0.0 <= data.pass_threshold <= 1.0:
            err(BAD_PASS_THRESHOLD, node.id, "pass_threshold must be in [0,1]")
    elif isinstance(data, CodingData):
        if data.grader.complexity_max is not None and data.grader.complexity_max < 1:
            err(BAD_COMPLEXITY_MAX, node.id, "complexity_max must be >= 1 when set")
    elif isinstance(data, AbstractData):
        if not data.goal:
            err(EMPTY_GOAL, node.id, "abstract nodes need a non-empty goal")
        allowed = data.constraints.allowed_kinds
        if allowed is not None and not allowed <= CONCRETE_KINDS:
            err(BAD_CONSTRAINT, node.id, "allowed_kinds must be concrete kinds")
        rm = data.constraints.required_modality
        if rm is not None and rm not in MODALITIES:
            err(BAD_CONSTRAINT, node.id, f"unknown required_modality {rm!r}")


def _validate_graph(fragment: LearningFragment, err):
    adjacency: dict[str, list[str]] = {nid: [] for nid in fragment.nodes}
    for e in fragment.edges:
        if e.source in adjacency and e.target in fragment.nodes:
            adjacency[e.source].append(e.target)
    # reachability from entry
    reachable: set[str] = set()
    if fragment.entry in fragment.nodes:
        stack = [fragment.entry]
        while stack:
            nid = stack.pop()
            if nid in reachable:
                continue
            reachable.add(nid)
            stack.extend(adjacency[nid])
        for nid in fragment.nodes:
            if nid not in reachable:
                err(UNREACHABLE_NODE, nid, "node is not reachable from entry")
        exits = set(fragment.exit_nodes())
        if not exits & reachable:
            err(NO_REACHABLE_EXIT, "fragment", "no exit node is reachable from entry")
    # every cycle must have an escape edge out of its strongly connected component
    for component in _strongly_connected(adjacency):
        is_cycle = len(component) > 1 or any(
            nid in adjacency[nid] for nid in component
        )
        if not is_cycle:
            continue
        escapes = any(t not in component for nid in component for t in adjacency[nid])
        if not escapes:
            err(TRAPPED_CYCLE, sorted(component)[0], f"cycle {sorted(component)} has no exit edge")


def _strongly_connected(adjacency: dict[str, list[str]]) -> list[set[str]]:
    """Tarjan's algorithm, iterative."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[set[str]] = []
    counter = [0]

    for root in adjacency:
        if root in index:
            continue
        work = [(root, iter(adjacency[root]))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = lowlink[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(adjacency[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                components.append(component)
    return components


def validate_fragment(
    fragment: LearningFragment, context_vars: set[str] | frozenset[str] = CONTEXT_VARS
) -> ValidationReport:
    """Report every violated structural invariant; pure, never raises."""
    errors: list[ValidationIssue] = []
    warnings: list[ValidationIssue] = []

    def err(code: str, where: str, message: str):
        errors.append(ValidationIssue(code, where, message))

    if fragment.entry not in fragment.nodes:
        err(ENTRY_NOT_FOUND, "fragment", f"entry {fragment.entry!r} is not a node")
    if fragment.version < 1:
        err(BAD_VERSION, "fragment", "version must be >= 1")
    if fragment.cost <= 0:
        err(NONPOSITIVE_COST, "fragment", "cost must be positive")

    for node in fragment.nodes.values():
        _validate_node(node, err)

    for edge in fragment.edges:
        if edge.source not in fragment.nodes or edge.target not in fragment.nodes:
            err(DANGLING_EDGE, edge.id, "edge references a missing node")
        try:
            ast = edge.condition.compile()
        except ConditionSyntaxError as exc:
            err(CONDITION_SYNTAX, edge.id, str(exc))
            continue
        except UnknownBuiltin as exc:
            err(UNKNOWN_BUILTIN, edge.id, str(exc))
            continue
        unknown = conditions.free_variables(ast) - set(context_vars)
        if unknown:
            err(UNKNOWN_VARIABLE, edge.id, f"unknown variables: {sorted(unknown)}")

    _validate_graph(fragment, err)
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))
