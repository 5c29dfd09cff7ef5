"""Exceptions raised by the navigation library."""


class VgNavError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(VgNavError, ValueError):
    """An argument is non-finite, has the wrong shape or is out of range."""


class NumericalFailureError(VgNavError, ArithmeticError):
    """A factorisation failed even after jitter escalation."""


class DegenerateDataError(VgNavError, ValueError):
    """A training set cannot support a model fit."""


class OutOfBoundsError(VgNavError):
    """The robot left the world."""

    def __init__(self, x: float, y: float) -> None:
        super().__init__(f"robot left the world at ({x:.3f}, {y:.3f})")
        self.x = x
        self.y = y


class ConfigError(VgNavError):
    """A scenario configuration or class map is invalid.

    All problems found are collected in `problems` so they can be reported at once.
    """

    def __init__(self, problems: list[str] | str) -> None:
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class OutputError(VgNavError, OSError):
    """Writing or reading a result file failed."""

    def __init__(self, path, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
