"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NonrespError(Exception):
    exit_code = 1


class UsageError(NonrespError, ValueError):
    """Bad arguments or configuration."""

    exit_code = 1


class DataError(NonrespError, ValueError):
    """Input data violates its schema, or a file cannot be read/written."""

    exit_code = 2


class NumericFailure(NonrespError, ArithmeticError):
    """Non-finite values appeared during optimization."""

    exit_code = 3
