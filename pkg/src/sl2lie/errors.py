"""Exception hierarchy shared by every module."""


class Sl2Error(Exception):
    """Base class for all package errors."""


class UsageError(Sl2Error, ValueError):
    """Invalid argument (bad index, malformed coefficient spec, ...)."""


class DomainError(Sl2Error, ValueError):
    """A point lies on the excluded set of a vector field or formula."""


class ChartError(DomainError):
    """Group element or point falls outside the chart where a formula is valid.

    ``witness`` carries the offending quantity (a vanishing denominator,
    a nonpositive ``F_g`` value, ...).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegeneracyError(Sl2Error, ValueError):
    """Input data is degenerate (singular linear system, det <= 0, ...)."""
