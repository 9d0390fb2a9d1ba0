"""Deterministic cohort simulator and its analytic oracle.

Synthetic students are driven through the real execution engine with
submissions sampled from a ``StudentModel``.  Randomness comes from
SplitMix64 (Steele, Lea & Flood's 64-bit shift/multiply generator) with
the constants written out below, so runs are bit-stable across platforms;
trial ``t`` of a run seeded with ``s`` uses an independent stream seeded
with ``mix64(s XOR (t+1) * 0xD2B74407B1CE6E93)``.

The oracle treats traversal under unlimited attempts as an absorbing
Markov chain over nodes and computes expected submissions to completion
from the fundamental matrix: solve (I - Q) t = 1 and read the entry row.
Edge conditions must not depend on ``attempts`` for the chain abstraction
to hold (the chain state is the node alone).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .conditions import EvaluationContext, evaluate_condition
from .errors import NotAbsorbing, SchemaViolation, TutorKitError
from .model import (
    MODALITIES,
    CloseEndedData,
    Kind,
    LearningFragment,
    QuizData,
    canonical_json,
    normalize_answer,
)

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM = 0xD2B74407B1CE6E93


def mix64(value: int) -> int:
    """SplitMix64 finalizer; a bijective scramble of a 64-bit word."""
    z = value & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """64-bit add/shift/multiply generator; period 2^64."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)

    def random(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def choice_index(self, weights: list[float]) -> int:
        r = self.random()
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        return len(weights) - 1


def trial_rng(seed: int, trial: int) -> SplitMix64:
    return SplitMix64(mix64(seed ^ (((trial + 1) * _STREAM) & _MASK)))


# ---------------------------------------------------------------------------
# Student model


@dataclass(frozen=True)
class StudentModel:
    # per-kind pass probabilities; lessons always pass
    close_ended_pass: float = 1.0
    quiz_item_correct: float = 1.0
    coding_pass: float = 1.0
    # per close-ended node: distribution over {"correct", <distractor label>, "other"}
    answer_distributions: dict[str, dict[str, float]] = field(default_factory=dict)
    review_nodes: frozenset[str] = frozenset()

    def close_ended_distribution(self, node_id: str) -> dict[str, float]:
        dist = self.answer_distributions.get(node_id)
        if dist is None:
            p = self.close_ended_pass
            dist = {"correct": p, "other": 1.0 - p}
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-9:
            raise SchemaViolation(f"distribution for {node_id!r} sums to {total}, not 1")
        return dist


def model_from_dict(doc: dict) -> StudentModel:
    if not isinstance(doc, dict):
        raise SchemaViolation("student model must be an object")

    def prob(key, default):
        value = doc.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 <= value <= 1:
            raise SchemaViolation(f"{key} must be a probability")
        return float(value)

    dists = {}
    for node_id, dist in doc.get("answer_distributions", {}).items():
        if not isinstance(dist, dict):
            raise SchemaViolation(f"answer_distributions[{node_id!r}] must be an object")
        clean = {}
        for category, p in dist.items():
            if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 <= p <= 1:
                raise SchemaViolation(f"bad probability for {node_id!r}/{category!r}")
            clean[category] = float(p)
        dists[node_id] = clean
    return StudentModel(
        close_ended_pass=prob("close_ended_pass", 1.0),
        quiz_item_correct=prob("quiz_item_correct", 1.0),
        coding_pass=prob("coding_pass", 1.0),
        answer_distributions=dists,
        review_nodes=frozenset(doc.get("review_nodes", [])),
    )


def load_model(document: bytes | str) -> StudentModel:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(str(exc)) from exc
    return model_from_dict(doc)


# ---------------------------------------------------------------------------
# Submission sampling


def _nonmatching_answer(data: CloseEndedData) -> str:
    answer = "no-match"
    while data.expected.matches(answer) or any(
        normalize_answer(d) == normalize_answer(answer) for d in data.distractors
    ):
        answer += "-x"
    return answer


def _distractor_for_label(data: CloseEndedData, label: str) -> str:
    for answer, l in data.distractors.items():
        if l == label:
            return answer
    raise SchemaViolation(f"model references unknown distractor label {label!r}")


def _passing_source(grader) -> str:
    lines = list(grader.required_tokens)
    for vector in grader.test_vectors:
        lines.append(engine.ECHO_OUTPUT_MARKER + vector.expected_output)
    return "\n".join(lines)


def _failing_source(grader) -> str:
    if grader.forbidden_tokens:
        return _passing_source(grader) + "\n" + grader.forbidden_tokens[0]
    if grader.required_tokens:
        return ""
    if grader.complexity_max is not None and grader.branch_keywords:
        return "\n".join([grader.branch_keywords[0]] * grader.complexity_max)
    return _passing_source(grader)  # grader accepts everything


def sample_submission(node, model: StudentModel, rng: SplitMix64) -> engine.Submission:
    if node.kind is Kind.LESSON:
        return engine.Submission(kind=Kind.LESSON, payload=True)
    if node.kind is Kind.CLOSE_ENDED:
        data = node.kind_data
        dist = model.close_ended_distribution(node.id)
        categories = list(dist)
        i = rng.choice_index([dist[c] for c in categories])
        category = categories[i]
        if category == "correct":
            answer = data.expected.as_text()
        elif category == "other":
            answer = _nonmatching_answer(data)
        else:
            answer = _distractor_for_label(data, category)
        return engine.Submission(kind=Kind.CLOSE_ENDED, payload=answer)
    if node.kind is Kind.QUIZ:
        data = node.kind_data
        choices = []
        for item in data.items:
            if rng.random() < model.quiz_item_correct or len(item.choices) == 1:
                choices.append(item.correct)
            else:
                choices.append((item.correct + 1) % len(item.choices))
        return engine.Submission(kind=Kind.QUIZ, payload=choices)
    if node.kind is Kind.CODING:
        data = node.kind_data
        if rng.random() < model.coding_pass:
            source = _passing_source(data.grader)
        else:
            source = _failing_source(data.grader)
        return engine.Submission(kind=Kind.CODING, payload=source)
    raise SchemaViolation(f"cannot sample submissions for kind {node.kind.value!r}")


# ---------------------------------------------------------------------------
# Monte-Carlo simulation


@dataclass(frozen=True)
class Metrics:
    trials: int
    seed: int
    completion_rate: float
    mean_steps: float
    stderr_steps: float
    node_visits: dict[str, int]
    remediation_rate: float
    failure_reasons: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "completion_rate": self.completion_rate,
            "mean_steps": self.mean_steps,
            "stderr_steps": self.stderr_steps,
            "node_visits": dict(self.node_visits),
            "remediation_rate": self.remediation_rate,
            "failure_reasons": dict(self.failure_reasons),
        }

    def to_bytes(self) -> bytes:
        return canonical_json(self.to_dict())


def simulate(
    fragment: LearningFragment,
    model: StudentModel,
    trials: int,
    seed: int,
    step_cap: int = engine.DEFAULT_STEP_CAP,
    grader_plugin: str = "static",
) -> Metrics:
    """Run ``trials`` independent synthetic sessions; exact integer
    aggregation keeps the result order-independent."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    completed = 0
    total_steps = 0
    total_steps_sq = 0
    node_visits: dict[str, int] = {nid: 0 for nid in fragment.nodes}
    remediated = 0
    failure_reasons: dict[str, int] = {}

    # validate and negotiate once; per-trial sessions are cheap stamps of
    # this template (submit never mutates shared state)
    template = engine.start_session(
        fragment, learner_id="sim", capabilities=frozenset(MODALITIES), step_cap=step_cap
    )

    for t in range(trials):
        rng = trial_rng(seed, t)
        session = dataclasses.replace(template, learner_id=f"sim-{t}")
        visited_review = False
        try:
            while session.status is engine.SessionStatus.ACTIVE:
                node = fragment.nodes[session.current]
                node_visits[node.id] += 1
                if node.id in model.review_nodes:
                    visited_review = True
                submission = sample_submission(node, model, rng)
                result = engine.submit(session, submission, grader_plugin)
                session = result.session
                if session.status is engine.SessionStatus.FAILED:
                    reason = result.assignment.reason or "Unknown"
                    failure_reasons[reason] = failure_reasons.get(reason, 0) + 1
        except TutorKitError as exc:
            key = f"EngineError:{exc.code}"
            failure_reasons[key] = failure_reasons.get(key, 0) + 1
        else:
            if session.status is engine.SessionStatus.COMPLETED:
                completed += 1
        total_steps += session.steps
        total_steps_sq += session.steps * session.steps
        if visited_review:
            remediated += 1

    mean = total_steps / trials
    if trials > 1:
        variance = (total_steps_sq - trials * mean * mean) / (trials - 1)
        stderr = math.sqrt(max(variance, 0.0) / trials)
    else:
        stderr = 0.0
    return Metrics(
        trials=trials,
        seed=seed,
        completion_rate=completed / trials,
        mean_steps=mean,
        stderr_steps=stderr,
        node_visits=node_visits,
        remediation_rate=remediated / trials,
        failure_reasons=failure_reasons,
    )


# ---------------------------------------------------------------------------
# Analytic oracle


def _outcome_categories(node, model: StudentModel) -> list[tuple[float, EvaluationContext]]:
    """Probability-weighted evaluation contexts for one submission."""
    kind = node.kind
    if kind is Kind.LESSON:
        return [(1.0, EvaluationContext(passed=True, score=1.0, kind="lesson"))]
    if kind is Kind.CLOSE_ENDED:
        data: CloseEndedData = node.kind_data
        out = []
        for category, p in model.close_ended_distribution(node.id).items():
            if p == 0.0:
                continue
            if category == "correct":
                ctx = EvaluationContext(
                    passed=True,
                    score=1.0,
                    answer=normalize_answer(data.expected.as_text()),
                    kind="close_ended",
                )
            elif category == "other":
                ctx = EvaluationContext(passed=False, score=0.0, answer="", kind="close_ended")
            else:
                answer = _distractor_for_label(data, category)
                ctx = EvaluationContext(
                    passed=False,
                    score=0.0,
                    answer=normalize_answer(answer),
                    label=category,
                    kind="close_ended",
                )
            out.append((p, ctx))
        return out
    if kind is Kind.QUIZ:
        data: QuizData = node.kind_data
        n = len(data.items)
        q = model.quiz_item_correct
        out = []
        for k in range(n + 1):
            p = math.comb(n, k) * (q**k) * ((1 - q) ** (n - k))
            if p == 0.0:
                continue
            score = k / n
            out.append(
                (p, EvaluationContext(passed=score >= data.pass_threshold, score=score, kind="quiz"))
            )
        return out
    if kind is Kind.CODING:
        p = model.coding_pass
        out = []
        if p > 0:
            out.append((p, EvaluationContext(passed=True, score=1.0, kind="coding")))
        if p < 1:
            out.append((1 - p, EvaluationContext(passed=False, score=0.0, kind="coding")))
        return out
    raise NotAbsorbing(f"abstract node {node.id!r} has no traversal semantics")


_DONE = "__absorbed__"


def _transition_row(fragment: LearningFragment, node, model: StudentModel) -> dict[str, float]:
    outgoing = fragment.outgoing(node.id)
    is_exit = not outgoing
    row: dict[str, float] = {}
    for p, ctx in _outcome_categories(node, model):
        destination = None
        for edge in outgoing:
            if evaluate_condition(edge.condition.compile(), ctx):
                destination = edge.target
                break
        if destination is None:
            destination = _DONE if (is_exit and ctx.passed) else node.id
        row[destination] = row.get(destination, 0.0) + p
    return row


def analytic_expected_steps(fragment: LearningFragment, model: StudentModel) -> float:
    """Expected submissions to completion from entry under unlimited
    attempts, via the fundamental matrix of the induced absorbing chain."""
    rows = {nid: _transition_row(fragment, fragment.nodes[nid], model) for nid in fragment.nodes}

    # restrict to nodes reachable from entry with positive probability
    reachable: list[str] = []
    seen = {fragment.entry}
    queue = [fragment.entry]
    while queue:
        nid = queue.pop(0)
        reachable.append(nid)
        for dest, p in rows[nid].items():
            if dest != _DONE and p > 0 and dest not in seen:
                seen.add(dest)
                queue.append(dest)

    # absorbing iff every reachable node can reach the absorbing state
    can_absorb: set[str] = set()
    changed = True
    while changed:
        changed = False
        for nid in reachable:
            if nid in can_absorb:
                continue
            for dest, p in rows[nid].items():
                if p > 0 and (dest == _DONE or dest in can_absorb):
                    can_absorb.add(nid)
                    changed = True
                    break
    missing = [nid for nid in reachable if nid not in can_absorb]
    if missing:
        raise NotAbsorbing(f"no absorbing state reachable from {missing}")

    index = {nid: i for i, nid in enumerate(reachable)}
    n = len(reachable)
    Q = np.zeros((n, n))
    for nid in reachable:
        for dest, p in rows[nid].items():
            if dest != _DONE:
                Q[index[nid], index[dest]] = p
    t = np.linalg.solve(np.eye(n) - Q, np.ones(n))
    return float(t[index[fragment.entry]])
