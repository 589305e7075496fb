"""Exception hierarchy.

Every error raised on invalid input derives from :class:`PolyfluxError`, and
input validation errors additionally derive from :class:`ValueError`.
"""


class PolyfluxError(Exception):
    """Base class for all package errors."""


class ValidationError(PolyfluxError, ValueError):
    """Input violates a documented precondition."""


# flux
class LengthMismatch(ValidationError):
    pass


class NonIncreasingStates(ValidationError):
    pass


class NonConvex(ValidationError):
    pass


class EqualStates(ValidationError):
    pass


# profile
class InadmissibleUpJump(ValidationError):
    pass


class NonIncreasingBreakpoints(ValidationError):
    pass


class RedundantPiece(ValidationError):
    pass


class EmptyWindow(ValidationError):
    pass


# fronttrack
class OutOfHorizon(ValidationError):
    pass


class TripleCollision(PolyfluxError):
    """Raised only when the solver runs with ``strict_triples=True``."""


class InadmissibleMergeInternal(PolyfluxError, AssertionError):
    """A merge produced an up-jump that skips a state. Should be unreachable."""


# hopflax
class NonpositiveTime(ValidationError):
    pass


# stats
class NotCovered(ValidationError):
    pass


class RealizationError(PolyfluxError):
    def __init__(self, index, cause):
        super().__init__(f"realization {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.index, self.cause)


# hierarchy
class InadmissibleSpecies(ValidationError):
    pass


class RoleViolation(PolyfluxError):
    pass


# cli
class SchemaError(ValidationError):
    pass


class IoError(PolyfluxError, OSError):
    """Reading or writing an artifact failed."""
