"""
Quantum Feedback Networks - Error Taxonomy
Every failure carries a detail string, the block that failed and (for pivot
failures) the smallest relative pivot, so near-singular networks can be
diagnosed instead of just rejected.
"""

from typing import Optional


class QFNError(Exception):
    """Base error. `exit_code` is used by the CLI, `status_code` by the API."""

    exit_code = 1
    status_code = 400

    def __init__(self, detail: str, block: Optional[str] = None, smallest_pivot: Optional[float] = None):
        super().__init__(detail)
        self.detail = detail
        self.block = block
        self.smallest_pivot = smallest_pivot

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "detail": self.detail,
            "block": self.block,
            "smallest_pivot": self.smallest_pivot,
        }


class Singular(QFNError):
    """A pivot fell below sing_tol relative to the largest entry."""


class UnknownLabel(QFNError):
    pass


class LabelCollision(QFNError):
    pass


class DimMismatch(QFNError):
    pass


class SizeMismatch(QFNError):
    pass


class MalformedV(QFNError):
    pass


class NetlistSyntaxError(QFNError):
    """Document could not be read. `line`/`column` are 1-based when known."""

    def __init__(self, detail: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            detail = f"{detail} (line {line}, column {column})"
        super().__init__(detail, block="document")
        self.line = line
        self.column = column

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["line"] = self.line
        payload["column"] = self.column
        return payload


class UnknownPort(QFNError):
    pass


class DuplicateConnection(QFNError):
    pass


class InvariantViolation(QFNError):
    pass


class CrossCheckFailed(QFNError):
    pass


class ConfigError(QFNError):
    pass


# ============================================
# UNDEFINED REDUCTIONS (exit 2)
# ============================================

class ReductionUndefined(QFNError):
    """The requested network form does not exist for this input."""

    exit_code = 2
    status_code = 422


class IllPosed(ReductionUndefined):
    """I - S_ii is not invertible."""


class SchurUndefined(ReductionUndefined):
    """E_ii is not invertible, so the Stratonovich feedback rule does not apply."""


class NotRepresentable(ReductionUndefined):
    """I + S is singular: the model has no Stratonovich generator."""


class SeriesNotRepresentable(NotRepresentable):
    pass


class EvenCycle(NotRepresentable):
    pass
