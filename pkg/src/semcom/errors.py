"""Shared exception types."""


class ContractViolation(ValueError):
    """An operation was called with arguments violating its precondition."""


class ConfigError(ValueError):
    """A scenario / experiment configuration is malformed or unknown."""


class DecodeError(ValueError):
    """A bitstream cannot be parsed (wrong kind, truncated, bad framing)."""


class InsufficientObservationsError(RuntimeError):
    """Fewer valid observations than the estimator needs."""


class DegenerateGeometryError(RuntimeError):
    """Observation geometry is numerically degenerate (near-parallel rays)."""
