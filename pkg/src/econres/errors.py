"""Exception hierarchy.

Every error carries the CLI exit status it maps to, so the command line can
report failures without a lookup table.
"""

from __future__ import annotations


class ResilienceError(Exception):
    exit_code = 3
    code = "error"

    def to_report(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ConfigError(ResilienceError):
    """Invalid run configuration (exit 2)."""

    exit_code = 2
    code = "ValidationError"


class DataError(ResilienceError):
    exit_code = 3
    code = "DataError"


class InvariantViolation(ResilienceError):
    exit_code = 4
    code = "InvariantViolation"


# ingestion
class EmptyFile(DataError):
    code = "EmptyFile"


class MalformedHeader(DataError):
    code = "MalformedHeader"


class MalformedRow(DataError):
    code = "MalformedRow"

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column

    def to_report(self) -> dict:
        report = super().to_report()
        report.update(row=self.row, column=self.column)
        return report


class DuplicateCode(DataError):
    code = "DuplicateCode"


class UnknownContinentLabel(DataError):
    code = "UnknownContinentLabel"


class HttpError(DataError):
    code = "HttpError"

    def __init__(self, status: int, url: str = ""):
        super().__init__(f"HTTP {status} from {url}" if url else f"HTTP {status}")
        self.status = status


class SchemaError(DataError):
    code = "SchemaError"


# panel
class DuplicateCountry(DataError):
    code = "DuplicateCountry"


class UnknownContinent(DataError):
    code = "UnknownContinent"


class UnknownCovariateCode(DataError):
    code = "UnknownCovariateCode"


# index / stats
class DegenerateLevels(DataError):
    code = "DegenerateLevels"


class InsufficientData(DataError):
    code = "InsufficientData"


class DegenerateGroups(DataError):
    code = "DegenerateGroups"


class UnknownSelector(DataError):
    code = "UnknownSelector"


class InfeasibleProfile(ValueError):
    """A synthetic profile whose constraints cannot all hold."""


class DomainError(ValueError):
    pass


class NonFinite(ValueError):
    pass
