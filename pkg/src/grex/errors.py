"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes (see cli.EXIT_*): parse problems exit 2,
planner failures exit 3, evaluation problems exit 4.
"""

from __future__ import annotations


class GrexError(Exception):
    """Base class for all package errors."""


class DomainMismatchError(GrexError):
    """An action or state references facts outside the domain's universe."""


class NotApplicableError(GrexError):
    """apply() was called with an action whose preconditions do not hold."""


class ParseError(GrexError):
    """A scenario file could not be parsed. Carries source position."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path is not None:
            where += str(path)
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}" if where else message)


class UnsolvableError(GrexError):
    """The goal is unreachable from the given state."""


class BudgetExhaustedError(GrexError):
    """The planner ran out of its node or time budget before finishing."""


class QuestionNotApplicableError(GrexError):
    """A why/why-not question was asked for a goal on the wrong side of the
    final predicted/counterfactual partition."""


class EmptyExplananError(GrexError):
    """Marker selection was asked for a goal that has no explanan entries."""


class EvaluationError(GrexError):
    """Annotation scoring was called with unusable inputs."""
