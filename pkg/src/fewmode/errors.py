"""Exception and warning types shared across the package."""

from __future__ import annotations


class FewmodeError(Exception):
    """Base class for every error this package raises deliberately."""


class ValidationError(FewmodeError, ValueError):
    """Invalid input data or parameters; the message names the offending entry."""


class ParseError(ValidationError):
    """Malformed input file; carries the file path and a 1-based line number."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class NumericalError(FewmodeError, RuntimeError):
    """A numerical procedure failed (defective eigensystem, trace drift, ...)."""


class UnsupportedScenarioError(ValidationError):
    """Requested physical scenario lies outside the implemented sector."""


class StageError(FewmodeError):
    """Pipeline failure, tagged with the stage that raised it."""

    def __init__(self, stage, original):
        super().__init__(f"stage '{stage}': {original}")
        self.stage = stage
        self.original = original


class CoverageWarning(UserWarning):
    """Input tables do not fully cover the spectral or temporal support needed."""


class DataWarning(UserWarning):
    """Input data was adjusted during ingestion (clamping, re-sorting, ...)."""
