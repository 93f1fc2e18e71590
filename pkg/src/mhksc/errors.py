"""Exception hierarchy.

Each class maps onto one CLI exit-code family so the driver can report
configuration, input and numerical failures distinctly.
"""


class MhkscError(Exception):
    exit_code = 1


class ConfigError(MhkscError, ValueError):
    """Invalid parameters or infeasible settings."""

    exit_code = 2


class InputError(MhkscError):
    """Unreadable or malformed input files."""

    exit_code = 3


class NumericalError(MhkscError, ArithmeticError):
    """Eigensolver failure, degenerate kernel or exceeded capacity."""

    exit_code = 4


class CapacityError(NumericalError):
    """A memory cap (training size, affinity size, ground clusters) was exceeded."""
