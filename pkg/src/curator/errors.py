"""Exception hierarchy.

Every error raised by the engine derives from :class:`CuratorError`, which the
CLI maps to exit code 1. Parse errors carry the 1-based line number of the
offending record.
"""

from __future__ import annotations


class CuratorError(ValueError):
    """Base class for validation and precondition failures."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# input parsing
class MalformedLine(CuratorError):
    pass


class InvariantViolation(CuratorError):
    pass


class DuplicateKey(CuratorError):
    pass


# numeric kernels
class BadEpsilon(CuratorError):
    pass


class LengthMismatch(CuratorError):
    pass


class EmptyInput(CuratorError):
    pass


class ClassSpaceMismatch(CuratorError):
    pass


# selection
class BadBudget(CuratorError):
    pass


class UnknownId(CuratorError):
    pass


class TooLarge(CuratorError):
    pass


# fairness repair
class NoGroupedItems(CuratorError):
    pass


class BadTarget(CuratorError):
    pass


class MissingGroupTable(CuratorError):
    pass


# active domain adaptation
class EmptyTrainingSet(CuratorError):
    pass


class BadAlpha(CuratorError):
    pass


class SingleView(CuratorError):
    pass


# harness
class BadSpec(CuratorError):
    pass


class MissingClusterTags(CuratorError):
    pass


class BadConfig(CuratorError):
    pass
