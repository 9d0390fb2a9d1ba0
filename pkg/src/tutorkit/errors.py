"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class TutorKitError(Exception):
    """Base class for all engine errors."""

    code = "INTERNAL"


class MalformedDocument(TutorKitError):
    code = "MALFORMED_DOCUMENT"


class SchemaViolation(TutorKitError):
    code = "SCHEMA_VIOLATION"


class UnknownNode(TutorKitError):
    code = "UNKNOWN_NODE"


class ConditionSyntaxError(TutorKitError):
    """Raised by the condition parser; carries the offset of the bad token."""

    code = "CONDITION_SYNTAX"

    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"syntax error at position {position}: expected {expected}")


class UnknownVariable(TutorKitError):
    code = "UNKNOWN_VARIABLE"


class UnknownBuiltin(TutorKitError):
    code = "UNKNOWN_BUILTIN"


class TypeMismatch(TutorKitError):
    code = "TYPE_MISMATCH"

    def __init__(self, operator: str, types: tuple):
        self.operator = operator
        self.types = types
        super().__init__(f"operator {operator!r} cannot be applied to {types}")


class KindMismatch(TutorKitError):
    code = "KIND_MISMATCH"


class SessionNotActive(TutorKitError):
    code = "SESSION_NOT_ACTIVE"


class CapabilityMismatch(TutorKitError):
    code = "CAPABILITY_MISMATCH"

    def __init__(self, node_id: str, missing: set):
        self.node_id = node_id
        self.missing = missing
        super().__init__(f"node {node_id!r} needs one of {sorted(missing)}")


class UnrefinedFragment(TutorKitError):
    code = "UNREFINED_FRAGMENT"


class ShapeMismatch(TutorKitError):
    code = "SHAPE_MISMATCH"


class UncoverableGoal(TutorKitError):
    code = "UNCOVERABLE_GOAL"

    def __init__(self, missing: set):
        self.missing = set(missing)
        super().__init__(f"no catalog entry covers {sorted(self.missing)}")


class PrerequisiteCycle(TutorKitError):
    code = "PREREQUISITE_CYCLE"

    def __init__(self, fragment_ids: list):
        self.fragment_ids = list(fragment_ids)
        super().__init__(f"prerequisite cycle among {self.fragment_ids}")


class ChainTooLong(TutorKitError):
    code = "CHAIN_TOO_LONG"


class DepthExceeded(TutorKitError):
    code = "DEPTH_EXCEEDED"


class ResultInvalid(TutorKitError):
    """Internal consistency failure after refinement; indicates a defect."""

    code = "RESULT_INVALID"


class NotAbsorbing(TutorKitError):
    code = "NOT_ABSORBING"


class NotFound(TutorKitError):
    code = "NOT_FOUND"


class VersionConflict(TutorKitError):
    code = "VERSION_CONFLICT"
