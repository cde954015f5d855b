"""Exception hierarchy. CLI exit codes hang off these classes."""

from __future__ import annotations


class ComputeLCAError(Exception):
    """Base class for all library errors."""


class InvalidPhaseError(ComputeLCAError, ValueError):
    """Module and training phase do not form a valid pair."""


class AdpBasisMismatchError(ComputeLCAError, ValueError):
    """Two impact vectors with different ADP bases were added without widening."""


class DomainError(ComputeLCAError, ValueError):
    """A formula was evaluated outside its mathematical domain."""


class LogError(ComputeLCAError):
    """Problem reading a run log. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line is not None else message)


class LogParseError(LogError):
    pass


class DuplicateRunIdError(LogError):
    pass


class UnknownCategoryError(LogError):
    pass


class ConfigError(ComputeLCAError):
    """Invalid or inconsistent cluster configuration."""


class ComponentSpecError(ConfigError):
    """A component spec lacks a field its family's formula requires."""


class UnknownSourceError(ComputeLCAError, KeyError):
    """An energy-mix source has no water intensity."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class SweepError(ComputeLCAError):
    """A sweep path does not address a numeric configuration field."""
