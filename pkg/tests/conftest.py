"""Shared fixtures and helpers: canonical documents, scripted session runs,
and small hand-built fragments for planner/refinement tests."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tutorkit.engine import Session, SessionStatus, Submission, start_session, submit
from tutorkit.model import (
    ActivityNode,
    CloseEndedData,
    Edge,
    ConditionSpec,
    ExpectedAnswer,
    Kind,
    LearningFragment,
    LessonData,
    load_fragment,
)
from tutorkit.planner import CatalogEntry, FragmentCatalog

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

ALL_CAPS = frozenset({"text", "rich", "code", "audio"})


@pytest.fixture(scope="session")
def fixture_bytes() -> bytes:
    return (FIXTURES / "stats-avg-median.json").read_bytes()


@pytest.fixture(scope="session")
def fixture_doc(fixture_bytes) -> dict:
    return json.loads(fixture_bytes)


@pytest.fixture()
def fragment(fixture_bytes) -> LearningFragment:
    return load_fragment(fixture_bytes)


@pytest.fixture(scope="session")
def model_uniform_doc() -> dict:
    return json.loads((FIXTURES / "model-uniform-05.json").read_bytes())


@pytest.fixture(scope="session")
def rulepack_docs() -> list[dict]:
    return json.loads((FIXTURES / "rulepacks.json").read_bytes())


# ---------------------------------------------------------------------------
# Scripted session runs


def correct_submission(node: ActivityNode) -> Submission:
    """A submission the grader accepts, built from the node's own data."""
    if node.kind is Kind.LESSON:
        return Submission(Kind.LESSON, True)
    if node.kind is Kind.CLOSE_ENDED:
        return Submission(Kind.CLOSE_ENDED, node.kind_data.expected.as_text())
    if node.kind is Kind.QUIZ:
        return Submission(Kind.QUIZ, [item.correct for item in node.kind_data.items])
    if node.kind is Kind.CODING:
        return Submission(Kind.CODING, "\n".join(node.kind_data.grader.required_tokens))
    raise AssertionError(f"no scripted submission for kind {node.kind}")


def wrong_submission(node: ActivityNode) -> Submission:
    if node.kind is Kind.CLOSE_ENDED:
        return Submission(Kind.CLOSE_ENDED, "certainly-not-the-answer")
    if node.kind is Kind.QUIZ:
        return Submission(
            Kind.QUIZ,
            [(item.correct + 1) % len(item.choices) for item in node.kind_data.items],
        )
    if node.kind is Kind.CODING:
        return Submission(Kind.CODING, "")
    raise AssertionError(f"no wrong submission for kind {node.kind}")


def run_script(
    fragment: LearningFragment,
    overrides: dict[str, list[Submission]] | None = None,
    capabilities=("text", "code", "audio"),
    rules=(),
    max_steps: int = 100,
) -> tuple[Session, list[str]]:
    """Drive a session to a terminal state, answering correctly except where
    ``overrides`` queues submissions for a node id.  Returns the final
    session and the ordered list of visited node ids."""
    queues = {nid: list(subs) for nid, subs in (overrides or {}).items()}
    session = start_session(fragment, learner_id="scripted", capabilities=capabilities)
    visited: list[str] = []
    while session.status is SessionStatus.ACTIVE:
        assert session.steps < max_steps, "script did not terminate"
        node = fragment.nodes[session.current]
        visited.append(node.id)
        queue = queues.get(node.id)
        submission = queue.pop(0) if queue else correct_submission(node)
        session = submit(session, submission).session
    return session, visited


# ---------------------------------------------------------------------------
# Small hand-built fragments


def lesson_node(node_id: str, title: str = "lesson") -> ActivityNode:
    return ActivityNode(
        id=node_id,
        kind=Kind.LESSON,
        title=title,
        representations={"text": f"content of {node_id}"},
        kind_data=LessonData(),
    )


def question_node(node_id: str, expected: str = "42", max_attempts: int | None = None) -> ActivityNode:
    return ActivityNode(
        id=node_id,
        kind=Kind.CLOSE_ENDED,
        title=f"question {node_id}",
        representations={"text": f"prompt of {node_id}"},
        kind_data=CloseEndedData(prompt=f"prompt of {node_id}", expected=ExpectedAnswer(text=expected)),
        max_attempts=max_attempts,
    )


def always_edge(edge_id: str, source: str, target: str) -> Edge:
    return Edge(id=edge_id, source=source, target=target, condition=ConditionSpec(builtin="always"))


def pass_edge(edge_id: str, source: str, target: str) -> Edge:
    return Edge(id=edge_id, source=source, target=target, condition=ConditionSpec(builtin="pass"))


def make_fragment(
    frag_id: str,
    nodes: list[ActivityNode],
    edges: list[Edge],
    entry: str | None = None,
    provides=(),
    requires=(),
) -> LearningFragment:
    return LearningFragment(
        id=frag_id,
        title=f"fragment {frag_id}",
        version=1,
        entry=entry or nodes[0].id,
        nodes={n.id: n for n in nodes},
        edges=tuple(edges),
        provides=frozenset(provides),
        requires=frozenset(requires),
    )


def chain_fragment(frag_id: str, provides, requires=()) -> LearningFragment:
    """A 2-node lesson → question chain, the shape used as catalog content."""
    nodes = [lesson_node(f"{frag_id}-L"), question_node(f"{frag_id}-Q")]
    edges = [always_edge(f"{frag_id}-e", f"{frag_id}-L", f"{frag_id}-Q")]
    return make_fragment(frag_id, nodes, edges, provides=provides, requires=requires)


# The four-entry catalog used in planner tests: per-concept fragments with a
# prerequisite chain, plus one broader-but-costlier alternative.
def example_catalog() -> tuple[FragmentCatalog, dict[str, LearningFragment]]:
    fragments = {
        "F_avg": chain_fragment("F_avg", provides={"average"}),
        "F_med": chain_fragment("F_med", provides={"median"}, requires={"average"}),
        "F_diff": chain_fragment("F_diff", provides={"difference"}, requires={"average", "median"}),
        "F_all": chain_fragment("F_all", provides={"average", "median"}),
    }
    catalog = FragmentCatalog(
        entries=tuple(
            CatalogEntry(
                fragment_id=fid,
                version=1,
                provides=frag.provides,
                requires=frag.requires,
                cost=2.5 if fid == "F_all" else 1.0,
                kinds_present=frozenset(frag.kind_histogram()),
                modalities_required=frozenset({"text"}),
            )
            for fid, frag in fragments.items()
        )
    )
    return catalog, fragments


def resolver(fragments: dict[str, LearningFragment]):
    def resolve(fragment_id: str, version: int) -> LearningFragment:
        return fragments[fragment_id]

    return resolve
