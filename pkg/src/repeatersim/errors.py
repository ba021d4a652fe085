"""Exception types shared across the package."""


class RepeaterSimError(Exception):
    """Base class for all package errors."""


class ConfigError(RepeaterSimError):
    """A configuration field is missing, inconsistent, or out of range."""


class TraceError(RepeaterSimError):
    """An operation trace violates a structural invariant."""


class RoundCapExceeded(RepeaterSimError):
    """A protocol sample exceeded the configured round cap."""
