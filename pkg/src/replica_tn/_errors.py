from __future__ import annotations


class ReplicaTNError(Exception):
    """Base exception for all replica-tn errors."""
    pass


class UnsupportedParameterError(ReplicaTNError, ValueError):
    """Raised when k, d, q, an ensemble name or a rate lies outside the supported range."""
    pass


class ResourceError(ReplicaTNError):
    """Raised when a dense object would exceed a configured size cap."""
    def __init__(self, message: str, required: int | None = None, cap: int | None = None) -> None:
        super().__init__(message)
        self.required = required
        self.cap = cap


class ShapeMismatchError(ReplicaTNError, ValueError):
    """Raised when tensors, Gram matrices, projectors or boundaries disagree in size."""
    pass


class NumericDegeneracyError(ReplicaTNError):
    """Raised when a contraction that must be positive is not (e.g. before taking a log)."""
    def __init__(self, message: str, value: float | None = None) -> None:
        super().__init__(message)
        self.value = value


class ManifestError(ReplicaTNError):
    """Raised when a CLI run manifest fails validation."""
    def __init__(self, message: str, exit_code: int = 2) -> None:
        super().__init__(message)
        self.exit_code = exit_code
