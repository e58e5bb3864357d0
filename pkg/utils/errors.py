# utils/errors.py

from __future__ import annotations


class EqcError(Exception):
    """Base class for every error raised by this package."""


class CapacityError(EqcError):
    """A problem size exceeds what the dense simulator or exact solver can hold."""


class ValidationError(EqcError, ValueError):
    pass


class ConfigError(ValidationError):
    pass


class QubitIndexError(EqcError, IndexError):
    pass


class EpisodeCompleteError(EqcError):
    """Raised when a Q-value query or action selection finds no available node."""


class TrainingDivergedError(EqcError, ArithmeticError):
    pass


class InfeasibleRunError(EqcError):
    """A QAOA run whose measured outcomes contain no feasible tour."""


# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (ConfigError, FileNotFoundError)):
        return EXIT_USAGE
    return EXIT_FAILURE
