"""Exception hierarchy shared by all metric modules.

Everything raised on bad input derives from :class:`ValidationError`; file and
stream problems derive from :class:`FileError`. The CLI maps the two families
to exit codes 1 and 2.
"""


class MetricError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MetricError, ValueError):
    """Input violates a documented precondition."""


class FileError(MetricError, OSError):
    """A referenced file could not be read or written."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path

    def __str__(self):
        if self.path is None:
            return self.args[0]
        return f"{self.args[0]} ({self.path})"


class WriteError(FileError):
    pass


class DecodeError(ValidationError):
    pass


class UnsupportedFormat(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class EmptyContour(ValidationError):
    """A contour point set has no points.

    ``side`` names the offending argument (``"a"`` or ``"b"``) when known.
    """

    def __init__(self, message, side=None):
        super().__init__(message)
        self.side = side


class NonFiniteInput(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class IndefiniteMatrix(ValidationError):
    pass


class ZeroVector(ValidationError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NegativeInput(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class UnknownCandidate(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class IncompleteMetrics(ValidationError):
    pass


class ManifestParseError(ValidationError):
    pass


class EvaluationError(ValidationError):
    """One or more manifest pairs failed; ``failures`` maps pair id to message."""

    def __init__(self, failures):
        self.failures = dict(failures)
        lines = [f"{pid}: {msg}" for pid, msg in self.failures.items()]
        super().__init__(f"{len(lines)} pair(s) failed:\n  " + "\n  ".join(lines))


class NumericalError(MetricError, ArithmeticError):
    """Internal numerical inconsistency (e.g. a clearly negative distance)."""
