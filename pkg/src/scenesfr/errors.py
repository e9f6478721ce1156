"""Exception types shared across the toolkit."""


class DatasetError(Exception):
    """Raised when an input dataset cannot be enumerated or is unusable."""


class EmptyDatasetError(DatasetError):
    """Dataset location exists but nothing matched the requested pattern."""


class MaskError(Exception):
    """Raised for malformed or degenerate region mask definitions."""


class MeasurementError(Exception):
    """Raised when a single edge measurement cannot produce a curve.

    reason is a machine-readable code carried into the per-edge record:
    'edge_incoherent' or 'phase_coverage'.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason
