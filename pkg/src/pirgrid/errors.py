"""Exception hierarchy shared by every pirgrid module."""


class PirError(Exception):
    """Base class for all pirgrid errors."""


class DivisionByZero(PirError, ZeroDivisionError):
    pass


class ShapeError(PirError, ValueError):
    pass


class InvalidEvaluationPoint(PirError, ValueError):
    pass


class ThresholdError(PirError, ValueError):
    pass


class TooManyServers(PirError, ValueError):
    pass


class NeedMultipleServers(PirError, ValueError):
    pass


class KeyOutOfRange(PirError, IndexError):
    pass


class InsufficientResponses(PirError):
    """Fewer than t+1 responses reached the client."""


class IncompleteResponses(PirError):
    """LP-Chor needs every server; at least one answer is missing."""


class UnrecoverableResponse(PirError):
    """Decoding found no unique polynomial above the agreement bound."""


class CorruptDatabase(PirError):
    pass


class ReplicaDivergence(PirError):
    """Replicas reported different content digests."""


class FrameError(PirError):
    """Malformed wire frame.

    ``category`` is one of ``magic``, ``type``, ``length``, ``truncated``,
    ``payload``.
    """

    def __init__(self, category: str, message: str = ""):
        super().__init__(f"{category}: {message}" if message else category)
        self.category = category


class FaultProfileError(PirError, ValueError):
    pass


class PlanError(PirError, ValueError):
    pass


class PlanAborted(PirError):
    """Raised when an experiment cannot continue; carries the rows finished so far."""

    def __init__(self, message: str, rows=None):
        super().__init__(message)
        self.rows = list(rows or [])
