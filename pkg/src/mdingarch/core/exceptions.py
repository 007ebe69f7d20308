"""Exception hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI reports for it.
"""

from __future__ import annotations

from typing import Optional

EXIT_OK = 0
EXIT_WARNING = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class MdIngarchError(Exception):
    """Base class for all errors raised by mdingarch."""

    exit_code = EXIT_USAGE


class ParameterDomainError(MdIngarchError, ValueError):
    """A distribution or model parameter lies outside its admissible domain."""

    exit_code = EXIT_USAGE


class DegenerateDataError(MdIngarchError, ValueError):
    """The observed series cannot support the requested computation."""

    exit_code = EXIT_DATA


class DataFormatError(MdIngarchError, ValueError):
    """An input file could not be parsed."""

    exit_code = EXIT_DATA

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location = f"{path}:"
        if line is not None:
            location = f"{location}{line}: "
        elif location:
            location = f"{location} "
        super().__init__(f"{location}{message}")


class NumericalError(MdIngarchError, ArithmeticError):
    """An iterative routine failed or a required matrix was singular."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class SimulationDivergedError(NumericalError):
    """A simulated intensity became non-finite."""

    def __init__(self, t: int, value: float):
        self.t = t
        self.value = value
        super().__init__(f"simulated intensity diverged at t={t} (value {value!r})")
