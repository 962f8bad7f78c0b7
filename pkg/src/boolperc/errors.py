"""Exception hierarchy shared by every module."""


class BoolpercError(Exception):
    """Base class for all package errors."""


class UsageError(BoolpercError):
    """Arguments are individually valid but do not fit together (mixed spaces, wrong backend)."""


class DomainError(BoolpercError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class SamplingError(BoolpercError):
    """Rejection sampling gave up; carries diagnostics."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class GeometryError(BoolpercError):
    """A geometric precondition failed, e.g. an empty annulus."""


class ConfigurationError(BoolpercError):
    """A space, law or experiment configuration cannot be used."""


class CoverageError(BoolpercError):
    """The sampled halo does not cover the region an event needs."""
