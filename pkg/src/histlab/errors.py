"""Exception hierarchy.

Every failure raised by the library derives from :class:`HistlabError`.
Validation failures carry the offending magnitude so callers (and the
CLI) can report how badly an invariant was broken.
"""

from __future__ import annotations


class HistlabError(Exception):
    """Base class for all library errors."""


class ValidationError(HistlabError, ValueError):
    """An input object violates a structural invariant."""

    def __init__(self, message: str, magnitude: float | None = None, location=None):
        super().__init__(message)
        self.magnitude = magnitude
        self.location = location


class NotNormalized(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotIdempotent(ValidationError):
    pass


class NotExclusive(ValidationError):
    def __init__(self, message, magnitude=None, location=None, violations=()):
        super().__init__(message, magnitude, location)
        # names of every family invariant that failed, not just the first
        self.violations = tuple(violations)


class NotExhaustive(ValidationError):
    def __init__(self, message, magnitude=None, location=None, violations=()):
        super().__init__(message, magnitude, location)
        self.violations = tuple(violations)


class DimensionMismatch(ValidationError):
    pass


class EigendecompositionFailure(HistlabError, ArithmeticError):
    pass


class TimesNotIncreasing(ValidationError):
    pass


class CompletenessViolation(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class InvalidPartition(ValidationError):
    pass


class ScheduleMismatch(ValidationError):
    pass


class RecordTimeNotAfterHistories(ValidationError):
    pass


class AlignmentIncomplete(ValidationError):
    pass


class WrongKind(HistlabError, TypeError):
    pass


class DomainRefusal(HistlabError):
    """A well-formed request the formulation declines to answer."""


class NotRecorded(DomainRefusal):
    pass


class NotDecoherent(DomainRefusal):
    pass


class AllBranchesNull(DomainRefusal):
    pass


class ZeroEvidence(DomainRefusal):
    pass


class ParamOutOfRange(HistlabError, ValueError):
    pass


class PacketOverflow(ParamOutOfRange):
    pass


class DimensionGuard(ParamOutOfRange):
    pass


class ModelFileError(HistlabError):
    """The model file could not be read or parsed."""
