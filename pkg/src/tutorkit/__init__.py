"""Adaptive learning-path engine.

Learning fragments are directed graphs of typed activities with
condition-guarded edges.  The execution engine grades submissions and
follows the first matching edge; the planner refines goal-only abstract
activities into concrete fragment chains; a gamification engine folds
activity events into points, badges, and streaks; a REST service exposes
everything to heterogeneous frontends; a seeded simulator verifies path
designs against an absorbing-Markov-chain oracle.
"""

from .conditions import (
    EvaluationContext,
    builtin_condition,
    evaluate_condition,
    parse_condition,
    print_condition,
)
from .engine import (
    Session,
    Submission,
    ValidationOutcome,
    current_activity,
    start_session,
    submit,
)
from .model import (
    LearningFragment,
    ValidationReport,
    load_fragment,
    outgoing_edges,
    serialize_fragment,
    validate_fragment,
)
from .planner import FragmentCatalog, Plan, RefinementLimits, plan_goal, refine
from .simulator import StudentModel, analytic_expected_steps, simulate

__all__ = [
    "EvaluationContext",
    "FragmentCatalog",
    "LearningFragment",
    "Plan",
    "RefinementLimits",
    "Session",
    "StudentModel",
    "Submission",
    "ValidationOutcome",
    "ValidationReport",
    "analytic_expected_steps",
    "builtin_condition",
    "current_activity",
    "evaluate_condition",
    "load_fragment",
    "outgoing_edges",
    "parse_condition",
    "plan_goal",
    "print_condition",
    "refine",
    "serialize_fragment",
    "simulate",
    "start_session",
    "submit",
    "validate_fragment",
]
