"""Per-session execution: render the current activity, grade submissions,
pick the next activity by evaluating outgoing edge conditions in priority
order.

All transitions are pure: ``submit`` returns a new Session value and never
mutates its input, so callers can snapshot, persist, and replay sessions
freely.  The service layer guarantees at most one in-flight transition per
session.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from . import gamification as gamify
from .conditions import EvaluationContext, evaluate_condition
from .errors import (
    CapabilityMismatch,
    KindMismatch,
    SessionNotActive,
    ShapeMismatch,
    UnrefinedFragment,
)
from .model import (
    MODALITIES,
    ActivityNode,
    CloseEndedData,
    CodingData,
    Kind,
    LearningFragment,
    QuizData,
    answers_match,
    normalize_answer,
    validate_fragment,
)

DEFAULT_STEP_CAP = 1000

ECHO_OUTPUT_MARKER = "#|out:"


class SessionStatus(str, Enum):
    ACTIVE = "Active"
    COMPLETED = "Completed"
    FAILED = "Failed"


class AssignmentKind(str, Enum):
    MOVE = "move"
    STAY = "stay"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass(frozen=True)
class ValidationOutcome:
    passed: bool
    score: float
    answer: str = ""
    label: str = ""
    feedback: str = ""
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "score": self.score,
            "answer": self.answer,
            "label": self.label,
            "feedback": self.feedback,
            "detail": dict(self.detail),
        }


@dataclass(frozen=True)
class Submission:
    kind: Kind
    # lesson: ignored; close_ended: answer string; quiz: list of chosen
    # indices; coding: source text
    payload: object = None

    def to_dict(self) -> dict:
        payload = self.payload
        if isinstance(payload, tuple):
            payload = list(payload)
        return {"kind": self.kind.value, "payload": payload}

    @staticmethod
    def from_dict(doc: dict) -> "Submission":
        return Submission(kind=Kind(doc["kind"]), payload=doc.get("payload"))


@dataclass(frozen=True)
class NextAssignment:
    kind: AssignmentKind
    target: str | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "target": self.target, "reason": self.reason}


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int  # strictly increasing from 1
    node: str
    submission: Submission
    outcome: ValidationOutcome
    chosen_edge: str | None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "node": self.node,
            "submission": self.submission.to_dict(),
            "outcome": self.outcome.to_dict(),
            "chosen_edge": self.chosen_edge,
        }


@dataclass(frozen=True)
class RenderedActivity:
    node: str
    kind: Kind
    modality: str
    payload: str
    submission_schema: dict

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "kind": self.kind.value,
            "modality": self.modality,
            "payload": self.payload,
            "submission_schema": dict(self.submission_schema),
        }


@dataclass(frozen=True)
class Session:
    id: str
    fragment: LearningFragment  # refined snapshot
    learner_id: str
    capabilities: frozenset[str]
    current: str
    attempts: dict[str, int]
    steps: int
    status: SessionStatus
    transcript: tuple[TranscriptEntry, ...]
    gamification: gamify.GamificationState
    rules: tuple[gamify.Rule, ...] = ()
    step_cap: int = DEFAULT_STEP_CAP
    created_at: float = 0.0


@dataclass(frozen=True)
class SubmissionResult:
    session: Session
    outcome: ValidationOutcome
    assignment: NextAssignment
    awards: tuple[gamify.Award, ...]
    event: gamify.ActivityEvent


# ---------------------------------------------------------------------------
# Graders


def grade_lesson(ack: object = True) -> ValidationOutcome:
    return ValidationOutcome(passed=True, score=1.0, feedback="lesson acknowledged")


def grade_close_ended(data: CloseEndedData, answer: str) -> ValidationOutcome:
    normalized = normalize_answer(answer)
    if data.expected.matches(answer):
        return ValidationOutcome(passed=True, score=1.0, answer=normalized, feedback="correct")
    for distractor, label in data.distractors.items():
        if answers_match(distractor, answer):
            return ValidationOutcome(
                passed=False,
                score=0.0,
                answer=normalized,
                label=label,
                feedback=f"known misconception: {label}",
            )
    return ValidationOutcome(passed=False, score=0.0, answer=normalized, feedback="incorrect")


def grade_quiz(data: QuizData, choices) -> ValidationOutcome:
    if not isinstance(choices, (list, tuple)) or len(choices) != len(data.items):
        raise ShapeMismatch(f"expected {len(data.items)} choices, got {choices!r}")
    correct = 0
    for item, choice in zip(data.items, choices):
        if not isinstance(choice, int) or isinstance(choice, bool) or not 0 <= choice < len(item.choices):
            raise ShapeMismatch(f"choice {choice!r} out of range for item {item.stem!r}")
        if choice == item.correct:
            correct += 1
    score = correct / len(data.items)
    passed = score >= data.pass_threshold
    return ValidationOutcome(
        passed=passed,
        score=score,
        feedback=f"{correct}/{len(data.items)} correct",
        detail={"correct": correct, "items": len(data.items)},
    )


def _declared_outputs(source: str) -> list[str]:
    outputs = []
    for line in source.splitlines():
        if line.startswith(ECHO_OUTPUT_MARKER):
            outputs.append(line[len(ECHO_OUTPUT_MARKER):])
    return outputs


def grade_coding(data: CodingData, source: str, grader_plugin: str = "static") -> ValidationOutcome:
    """Static checks plus an optional output check.

    Plugins: "static" ignores test vectors; "echo" compares the
    submission's declared outputs (lines after the `#|out:` marker, one
    per vector, in order) byte-wise against each vector's expected output.
    """
    g = data.grader
    checks: list[dict] = []
    for token in g.required_tokens:
        checks.append(
            {"check": "required_token", "token": token, "passed": token in source}
        )
    for token in g.forbidden_tokens:
        checks.append(
            {"check": "forbidden_token", "token": token, "passed": token not in source}
        )
    complexity = 1 + sum(source.count(kw) for kw in g.branch_keywords)
    if g.complexity_max is not None:
        checks.append(
            {
                "check": "complexity",
                "complexity": complexity,
                "max": g.complexity_max,
                "passed": complexity <= g.complexity_max,
            }
        )
    if grader_plugin == "echo" and g.test_vectors:
        declared = _declared_outputs(source)
        for i, vector in enumerate(g.test_vectors):
            actual = declared[i] if i < len(declared) else None
            checks.append(
                {
                    "check": "output",
                    "input": vector.input,
                    "expected": vector.expected_output,
                    "actual": actual,
                    "passed": actual == vector.expected_output,
                }
            )
    passed_count = sum(1 for c in checks if c["passed"])
    score = passed_count / len(checks) if checks else 1.0
    passed = passed_count == len(checks)
    return ValidationOutcome(
        passed=passed,
        score=score,
        feedback="all checks passed" if passed else "some checks failed",
        detail={"checks": checks, "complexity": complexity},
    )


def grade(node: ActivityNode, submission: Submission, grader_plugin: str = "static") -> ValidationOutcome:
    data = node.kind_data
    if node.kind is Kind.LESSON:
        return grade_lesson(submission.payload)
    if node.kind is Kind.CLOSE_ENDED:
        payload = submission.payload
        if not isinstance(payload, str):
            raise ShapeMismatch("close_ended submissions carry an answer string")
        return grade_close_ended(data, payload)
    if node.kind is Kind.QUIZ:
        return grade_quiz(data, submission.payload)
    if node.kind is Kind.CODING:
        payload = submission.payload
        if not isinstance(payload, str):
            raise ShapeMismatch("coding submissions carry source text")
        return grade_coding(data, payload, grader_plugin)
    raise KindMismatch(f"cannot grade kind {node.kind.value!r}")


# ---------------------------------------------------------------------------
# Rendering


def choose_modality(node: ActivityNode, capabilities: frozenset[str]) -> str | None:
    """First modality in the fixed preference order that the node offers
    and the session supports."""
    for modality in MODALITIES:
        if modality in node.representations and modality in capabilities:
            return modality
    return None


def submission_schema(node: ActivityNode) -> dict:
    if node.kind is Kind.LESSON:
        return {"kind": "lesson", "payload": "acknowledgement (any value)"}
    if node.kind is Kind.CLOSE_ENDED:
        return {"kind": "close_ended", "payload": "answer string"}
    if node.kind is Kind.QUIZ:
        return {
            "kind": "quiz",
            "payload": "list of chosen indices, one per item",
            "items": [len(it.choices) for it in node.kind_data.items],
        }
    if node.kind is Kind.CODING:
        return {"kind": "coding", "payload": "source text"}
    return {"kind": "abstract"}


# ---------------------------------------------------------------------------
# Session lifecycle


def start_session(
    fragment: LearningFragment,
    learner_id: str,
    capabilities,
    *,
    session_id: str = "",
    rules: tuple[gamify.Rule, ...] = (),
    step_cap: int = DEFAULT_STEP_CAP,
    created_at: float = 0.0,
) -> Session:
    """Validate, negotiate capabilities up front, and open an active session
    positioned at the fragment's entry node."""
    capabilities = frozenset(capabilities)
    if not capabilities:
        raise CapabilityMismatch("(session)", set(MODALITIES))
    abstract = fragment.abstract_nodes()
    if abstract:
        raise UnrefinedFragment(f"fragment has abstract nodes: {abstract}")
    report = validate_fragment(fragment)
    if not report.ok:
        raise UnrefinedFragment(f"fragment has validation errors: {report.errors[0].code}")
    for node in fragment.nodes.values():
        if choose_modality(node, capabilities) is None:
            raise CapabilityMismatch(node.id, set(node.representations) - capabilities)
    return Session(
        id=session_id,
        fragment=fragment,
        learner_id=learner_id,
        capabilities=capabilities,
        current=fragment.entry,
        attempts={},
        steps=0,
        status=SessionStatus.ACTIVE,
        transcript=(),
        gamification=gamify.GamificationState(),
        rules=tuple(rules),
        step_cap=step_cap,
        created_at=created_at,
    )


def current_activity(session: Session) -> RenderedActivity:
    if session.status is not SessionStatus.ACTIVE:
        raise SessionNotActive(f"session status is {session.status.value}")
    node = session.fragment.nodes[session.current]
    modality = choose_modality(node, session.capabilities)
    if modality is None:  # impossible after start_session's up-front check
        raise CapabilityMismatch(node.id, set(node.representations))
    return RenderedActivity(
        node=node.id,
        kind=node.kind,
        modality=modality,
        payload=node.representations[modality],
        submission_schema=submission_schema(node),
    )


def submit(session: Session, submission: Submission, grader_plugin: str = "static") -> SubmissionResult:
    """Grade the submission, pick the next activity, and fold the resulting
    activity event into the gamification state."""
    if session.status is not SessionStatus.ACTIVE:
        raise SessionNotActive(f"session status is {session.status.value}")
    node = session.fragment.nodes[session.current]
    if submission.kind is not node.kind:
        raise KindMismatch(
            f"current node {node.id!r} is {node.kind.value}, got {submission.kind.value}"
        )

    outcome = grade(node, submission, grader_plugin)

    attempts = dict(session.attempts)
    attempts[node.id] = attempts.get(node.id, 0) + 1
    steps = session.steps + 1

    ctx = EvaluationContext(
        passed=outcome.passed,
        score=outcome.score,
        answer=outcome.answer,
        label=outcome.label,
        attempts=attempts[node.id],
        kind=node.kind.value,
    )

    chosen_edge = None
    for edge in session.fragment.outgoing(node.id):
        if evaluate_condition(edge.condition.compile(), ctx):
            chosen_edge = edge
            break

    exhausted = node.max_attempts is not None and attempts[node.id] >= node.max_attempts
    is_exit = not session.fragment.outgoing(node.id)

    if chosen_edge is not None:
        status = SessionStatus.ACTIVE
        assignment = NextAssignment(AssignmentKind.MOVE, target=chosen_edge.target)
        new_current = chosen_edge.target
    elif is_exit and outcome.passed:
        status = SessionStatus.COMPLETED
        assignment = NextAssignment(AssignmentKind.COMPLETED)
        new_current = node.id
    elif exhausted:
        status = SessionStatus.FAILED
        assignment = NextAssignment(AssignmentKind.FAILED, reason="AttemptsExhausted")
        new_current = node.id
    else:
        status = SessionStatus.ACTIVE
        assignment = NextAssignment(AssignmentKind.STAY, target=node.id)
        new_current = node.id

    if status is SessionStatus.ACTIVE and steps >= session.step_cap:
        status = SessionStatus.FAILED
        assignment = NextAssignment(AssignmentKind.FAILED, reason="StepCapExceeded")

    event = gamify.ActivityEvent(
        node=node.id,
        kind=node.kind.value,
        passed=outcome.passed,
        first_attempt=attempts[node.id] == 1,
        session_completed=status is SessionStatus.COMPLETED,
    )
    state, awards = gamify.process_event(session.gamification, event, session.rules)

    entry = TranscriptEntry(
        seq=steps,
        node=node.id,
        submission=submission,
        outcome=outcome,
        chosen_edge=chosen_edge.id if chosen_edge else None,
    )
    new_session = replace(
        session,
        current=new_current,
        attempts=attempts,
        steps=steps,
        status=status,
        transcript=session.transcript + (entry,),
        gamification=state,
    )
    return SubmissionResult(
        session=new_session,
        outcome=outcome,
        assignment=assignment,
        awards=tuple(awards),
        event=event,
    )


# ---------------------------------------------------------------------------
# Session documents


def _rule_to_dict(rule: gamify.Rule) -> dict:
    return {
        "id": rule.id,
        "trigger": rule.trigger,
        "points": rule.points,
        "badge": rule.badge,
        "kind_filter": rule.kind_filter,
    }


def _outcome_from_dict(doc: dict) -> ValidationOutcome:
    return ValidationOutcome(
        passed=doc["passed"],
        score=doc["score"],
        answer=doc.get("answer", ""),
        label=doc.get("label", ""),
        feedback=doc.get("feedback", ""),
        detail=doc.get("detail", {}),
    )


def session_to_dict(session: Session) -> dict:
    from .model import fragment_to_dict

    return {
        "id": session.id,
        "fragment": fragment_to_dict(session.fragment),
        "learner_id": session.learner_id,
        "capabilities": sorted(session.capabilities),
        "current": session.current,
        "attempts": dict(session.attempts),
        "steps": session.steps,
        "status": session.status.value,
        "transcript": [entry.to_dict() for entry in session.transcript],
        "gamification": session.gamification.to_dict(),
        "rules": [_rule_to_dict(r) for r in session.rules],
        "step_cap": session.step_cap,
        "created_at": session.created_at,
    }


def session_from_dict(doc: dict) -> Session:
    from .model import fragment_from_dict

    transcript = tuple(
        TranscriptEntry(
            seq=e["seq"],
            node=e["node"],
            submission=Submission.from_dict(e["submission"]),
            outcome=_outcome_from_dict(e["outcome"]),
            chosen_edge=e.get("chosen_edge"),
        )
        for e in doc.get("transcript", [])
    )
    rules = tuple(
        gamify.Rule(
            id=r["id"],
            trigger=r["trigger"],
            points=r.get("points", 0),
            badge=r.get("badge"),
            kind_filter=r.get("kind_filter"),
        )
        for r in doc.get("rules", [])
    )
    return Session(
        id=doc["id"],
        fragment=fragment_from_dict(doc["fragment"]),
        learner_id=doc["learner_id"],
        capabilities=frozenset(doc["capabilities"]),
        current=doc["current"],
        attempts=dict(doc.get("attempts", {})),
        steps=doc["steps"],
        status=SessionStatus(doc["status"]),
        transcript=transcript,
        gamification=gamify.GamificationState.from_dict(doc.get("gamification", {})),
        rules=rules,
        step_cap=doc.get("step_cap", DEFAULT_STEP_CAP),
        created_at=doc.get("created_at", 0.0),
    )
