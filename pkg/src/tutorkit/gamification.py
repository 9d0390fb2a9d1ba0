"""Event-driven reward engine: points, badges, and streaks.

State evolves as a pure left fold over activity events, so a session's
gamification state can always be recomputed from its transcript
(``replay``) and must match the live state.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import SchemaViolation

_STREAK_RE = re.compile(r"^streak\((\d+)\)$")

TRIGGERS = ("activity_completed", "first_try_correct", "session_completed")


@dataclass(frozen=True)
class Rule:
    id: str
    trigger: str  # activity_completed | first_try_correct | streak(n) | session_completed
    points: int = 0
    badge: str | None = None
    kind_filter: str | None = None

    def streak_target(self) -> int | None:
        m = _STREAK_RE.match(self.trigger)
        return int(m.group(1)) if m else None


@dataclass(frozen=True)
class RulePack:
    id: str
    applies_to: frozenset[str]
    rules: tuple[Rule, ...]


@dataclass(frozen=True)
class GamificationState:
    points: int = 0
    badges: frozenset[str] = frozenset()
    streak: int = 0  # consecutive first-submission passes

    def to_dict(self) -> dict:
        return {"points": self.points, "badges": sorted(self.badges), "streak": self.streak}

    @staticmethod
    def from_dict(doc: dict) -> "GamificationState":
        return GamificationState(
            points=doc.get("points", 0),
            badges=frozenset(doc.get("badges", [])),
            streak=doc.get("streak", 0),
        )


@dataclass(frozen=True)
class ActivityEvent:
    node: str
    kind: str
    passed: bool
    first_attempt: bool
    session_completed: bool

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "kind": self.kind,
            "passed": self.passed,
            "first_attempt": self.first_attempt,
            "session_completed": self.session_completed,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ActivityEvent":
        return ActivityEvent(
            node=doc["node"],
            kind=doc["kind"],
            passed=doc["passed"],
            first_attempt=doc["first_attempt"],
            session_completed=doc["session_completed"],
        )


@dataclass(frozen=True)
class Award:
    rule_id: str
    points: int
    badge: str | None = None

    def to_dict(self) -> dict:
        return {"rule_id": self.rule_id, "points": self.points, "badge": self.badge}


def _rule_fires(rule: Rule, event: ActivityEvent, new_streak: int, old_streak: int) -> bool:
    if rule.kind_filter is not None and rule.kind_filter != event.kind:
        return False
    target = rule.streak_target()
    if target is not None:
        # fires only on the transition to exactly n
        return new_streak == target and old_streak == target - 1
    if rule.trigger == "activity_completed":
        return event.passed
    if rule.trigger == "first_try_correct":
        return event.passed and event.first_attempt
    if rule.trigger == "session_completed":
        return event.session_completed
    return False


def process_event(
    state: GamificationState, event: ActivityEvent, rules
) -> tuple[GamificationState, list[Award]]:
    """Update the streak, then fire matching rules in rule-list order."""
    old_streak = state.streak
    new_streak = old_streak + 1 if (event.passed and event.first_attempt) else 0
    points = state.points
    badges = set(state.badges)
    awards: list[Award] = []
    for rule in rules:
        if _rule_fires(rule, event, new_streak, old_streak):
            points += rule.points
            if rule.badge is not None:
                badges.add(rule.badge)
            awards.append(Award(rule_id=rule.id, points=rule.points, badge=rule.badge))
    return GamificationState(points=points, badges=frozenset(badges), streak=new_streak), awards


def replay(events, rules) -> GamificationState:
    """Left fold of process_event from the zero state."""
    state = GamificationState()
    for event in events:
        state, _ = process_event(state, event, rules)
    return state


def merge_packs(packs) -> tuple[tuple[Rule, ...], list[str]]:
    """Concatenate pack rules; a rule id seen earlier shadows later ones."""
    merged: list[Rule] = []
    seen: set[str] = set()
    warnings: list[str] = []
    for pack in packs:
        for rule in pack.rules:
            if rule.id in seen:
                warnings.append(f"rule {rule.id!r} in pack {pack.id!r} shadowed by an earlier pack")
                continue
            seen.add(rule.id)
            merged.append(rule)
    return tuple(merged), warnings


# ---------------------------------------------------------------------------
# Rule pack documents


def _valid_trigger(trigger: str) -> bool:
    return trigger in TRIGGERS or _STREAK_RE.match(trigger) is not None


def rulepack_from_dict(doc: dict) -> RulePack:
    if not isinstance(doc, dict):
        raise SchemaViolation("rule pack must be an object")
    pack_id = doc.get("id")
    if not isinstance(pack_id, str):
        raise SchemaViolation("rule pack needs a string id")
    applies_to = doc.get("applies_to", [])
    if not isinstance(applies_to, list):
        raise SchemaViolation("applies_to must be a list of activity kinds")
    rules: list[Rule] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc.get("rules", [])):
        where = f"rules[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("id"), str):
            raise SchemaViolation(f"{where}: needs a string id")
        if raw["id"] in seen:
            raise SchemaViolation(f"{where}: duplicate rule id {raw['id']!r} within pack")
        seen.add(raw["id"])
        trigger = raw.get("trigger")
        if not isinstance(trigger, str) or not _valid_trigger(trigger):
            raise SchemaViolation(f"{where}: unknown trigger {trigger!r}")
        target = _STREAK_RE.match(trigger)
        if target and int(target.group(1)) < 2:
            raise SchemaViolation(f"{where}: streak target must be >= 2")
        award = raw.get("award", {})
        points = award.get("points", 0)
        if not isinstance(points, int) or isinstance(points, bool) or points < 0:
            raise SchemaViolation(f"{where}: points must be a non-negative integer")
        badge = award.get("badge")
        if badge is not None and not isinstance(badge, str):
            raise SchemaViolation(f"{where}: badge must be a string")
        kind_filter = raw.get("kind_filter")
        if kind_filter is not None and not isinstance(kind_filter, str):
            raise SchemaViolation(f"{where}: kind_filter must be a string")
        rules.append(
            Rule(id=raw["id"], trigger=trigger, points=points, badge=badge, kind_filter=kind_filter)
        )
    return RulePack(id=pack_id, applies_to=frozenset(applies_to), rules=tuple(rules))


def rulepack_to_dict(pack: RulePack) -> dict:
    return {
        "id": pack.id,
        "applies_to": sorted(pack.applies_to),
        "rules": [
            {
                "id": r.id,
                "trigger": r.trigger,
                "kind_filter": r.kind_filter,
                "award": {"points": r.points, "badge": r.badge},
            }
            for r in pack.rules
        ],
    }


def load_rulepack(document: bytes | str) -> RulePack:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(str(exc)) from exc
    return rulepack_from_dict(doc)


def load_rulepacks(document: bytes | str) -> list[RulePack]:
    """Load a document holding either one pack or an array of packs."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    doc = json.loads(document)
    if isinstance(doc, list):
        return [rulepack_from_dict(p) for p in doc]
    return [rulepack_from_dict(doc)]
