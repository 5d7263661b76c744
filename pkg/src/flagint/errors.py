"""Exception hierarchy shared across the package.

Everything derives from FlagIntError so callers can catch package
failures with one handler; the CLI maps these onto exit codes.
"""

from __future__ import annotations


class FlagIntError(Exception):
    """Base class for all package-specific failures."""


class ExponentRangeError(FlagIntError, ValueError):
    """An exponent or dimension is outside its admissible range."""


class ConfigIncompleteError(FlagIntError, ValueError):
    """An operation needs p and/or q but the config does not carry them."""


class RegionError(FlagIntError, ValueError):
    """The configuration lies outside the exponent region the operation needs."""


class PreconditionError(FlagIntError, ValueError):
    """A stated operation precondition is violated."""


class SingularityError(FlagIntError, ValueError):
    """Pointwise evaluation was requested on the kernel's singular set."""


class AccuracyError(FlagIntError, RuntimeError):
    """The requested accuracy is unattainable; carries the best estimate.

    Attributes
    ----------
    value, err:
        Best available estimate and its a-posteriori error bound.
    """

    def __init__(self, message: str, value: float = float("nan"), err: float = float("inf")):
        super().__init__(message)
        self.value = float(value)
        self.err = float(err)


class FitWindowError(FlagIntError, ValueError):
    """A decay fit was requested on a window with fewer than 4 points."""


class UsageError(FlagIntError, ValueError):
    """Malformed run configuration at the CLI boundary."""
