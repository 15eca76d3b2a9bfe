"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MfgfbError(Exception):
    """Base class for all library errors."""


class DomainError(MfgfbError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InputError(MfgfbError, ValueError):
    """Malformed or inconsistent input data (grids, profiles, configs)."""


class StateError(MfgfbError, RuntimeError):
    """A field reached a state the discretization cannot handle."""


class MonotonicityError(StateError):
    """A discrete flow map stopped being strictly increasing in y."""

    def __init__(self, message: str, cell: tuple[int, int], slope: float):
        super().__init__(message)
        self.cell = cell
        self.slope = slope


class NonConvergenceError(MfgfbError, RuntimeError):
    """Newton iteration exhausted its budget.

    Carries the convergence trace, the last iterate and, for continuation
    runs, the level at which the failure happened.
    """

    def __init__(self, message: str, trace=None, last_field=None, level: int | None = None):
        super().__init__(message)
        self.trace = trace
        self.last_field = last_field
        self.level = level


class StepError(NonConvergenceError):
    """Backtracking could not produce an admissible step."""
