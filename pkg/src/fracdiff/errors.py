"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations


class FracDiffError(Exception):
    """Base class for all errors raised by :mod:`fracdiff`."""


class DomainError(FracDiffError, ValueError):
    """A parameter lies outside the domain where the operation is defined."""


class OrderingError(DomainError):
    """Interval endpoints are given in the wrong order."""


class MLOverflowError(FracDiffError, OverflowError):
    """The Mittag-Leffler value exceeds the double-precision range."""


class EllipticityError(DomainError):
    """Coefficient samples violate ellipticity, sign or positivity requirements."""


class SingularSystemError(FracDiffError):
    """A linear system could not be solved reliably.

    Attributes:
        step: time-step index at which the failure occurred, if any.
        condition: condition-number estimate, if available.
    """

    def __init__(self, message: str, step: int | None = None, condition: float | None = None):
        super().__init__(message)
        self.step = step
        self.condition = condition


class ConvergenceError(FracDiffError):
    """An iterative procedure stopped without meeting its tolerance."""

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history or [])


class NonContractionError(ConvergenceError):
    """Picard deltas failed to decrease over several consecutive sweeps."""


class PreconditionError(FracDiffError):
    """The hypotheses of a check are violated (distinct from a failed check)."""


class ConfigError(FracDiffError):
    """A scenario file is malformed; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
