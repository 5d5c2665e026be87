"""Exception types — the CLI maps each to an exit code."""


class PbspError(Exception):
    """Base class for every error raised by pbsp_sim."""

    exit_code = 1


class LayoutError(PbspError, ValueError):
    """Register layouts are incompatible, duplicated, or unknown."""

    exit_code = 2


class DomainError(PbspError, ValueError):
    """An input lies outside the mathematical domain of an operation."""

    exit_code = 2


class UsageError(PbspError, ValueError):
    """Invalid command-line grid or configuration file."""

    exit_code = 2


class CapacityError(PbspError, RuntimeError):
    """A dense object would exceed the configured budget."""

    exit_code = 3


class VerificationError(PbspError, RuntimeError):
    """At least one verification verdict failed."""

    exit_code = 1
