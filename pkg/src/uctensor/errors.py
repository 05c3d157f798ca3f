"""Exception types shared across the package."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """Iterative scaling failed to reach the threshold within the sweep budget.

    Carries the partial convergence report so callers can inspect the
    variance trace of the failed run.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class CapacityError(RuntimeError):
    """An operation would exceed a configured size cap.

    ``partial`` holds whatever results were produced before the cap hit,
    or ``None`` when the operation refused to start.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class OrderingSpecError(ValueError):
    """A consensus-ordering spec does not validate against its tensor.

    ``clause`` distinguishes which requirement failed: ``"support"`` when
    the slices do not share an identical known set, ``"ordering"`` when the
    known values are not strictly ordered across the slices.
    """

    def __init__(self, message: str, clause: str):
        super().__init__(message)
        self.clause = clause


class IngestError(ValueError):
    """Base class for rating-file ingestion failures; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ParseError(IngestError):
    """A line could not be split into the expected columns."""


class RecordError(IngestError):
    """A parsed record violates a value constraint (e.g. non-positive rating)."""


class DuplicateRecordError(IngestError):
    """Two records share the same key tuple and no dedupe policy is active."""


class UnknownIdError(LookupError):
    """An external id has no coordinate in the id map."""
