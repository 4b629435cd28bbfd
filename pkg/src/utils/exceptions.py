"""
Error types for NICR Planner
Every error carries the exit code the command line reports for it
"""

from typing import Optional, Sequence


class PlannerError(Exception):
    """Base class for all planner errors"""

    exit_code = 1


class InvalidParameterError(PlannerError, ValueError):
    """A planning or generation parameter is outside its admissible range"""

    exit_code = 2

    def __init__(self, message: str, fields: Sequence[str] = ()):
        super().__init__(message)
        self.fields = tuple(fields)


class ConfigError(PlannerError):
    """Unknown, missing or malformed configuration keys"""

    exit_code = 2

    def __init__(self, message: str, keys: Sequence[str] = ()):
        super().__init__(message)
        self.keys = tuple(keys)


class DatasetFormatError(PlannerError):
    """A dataset CSV could not be read"""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class DegenerateDesignError(PlannerError):
    """The design admits no finite sample size"""

    exit_code = 3


class IntegrationError(PlannerError):
    """Adaptive quadrature ran out of refinements before meeting its tolerance"""

    exit_code = 3


class FileAccessError(PlannerError):
    """A file could not be read or written"""

    exit_code = 4


class ConvergenceError(PlannerError):
    """The Fine-Gray fit did not converge"""

    exit_code = 5
