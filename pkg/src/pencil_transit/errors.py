"""Exception hierarchy. Each class maps to one CLI exit code."""


class PencilTransitError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class AssumptionViolation(PencilTransitError):
    """The problem does not satisfy the structural assumptions of the method."""

    exit_code = 1


class SpecError(PencilTransitError):
    """Malformed input: bad problem file, bad flag value, out-of-range argument."""

    exit_code = 2


class NumericFailure(PencilTransitError):
    """A numerical routine failed to reach its accuracy target."""

    exit_code = 3
