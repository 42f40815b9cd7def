"""Exception hierarchy shared across the package."""


class GeoDPError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(GeoDPError, ValueError):
    """Malformed or inconsistent user input (files, arrays, parameters)."""

    exit_code = 4


class MalformedInputError(InputError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionError(InputError):
    pass


class ConfigurationError(InputError):
    pass


class RankError(GeoDPError, ValueError):
    """Matrix is rank deficient; project onto its row space first."""

    exit_code = 4


class ConditioningError(GeoDPError, ArithmeticError):
    """A Gram matrix is numerically singular."""

    exit_code = 3

    def __init__(self, message, depth=None):
        if depth is not None:
            message = f"{message} (decomposition depth {depth})"
        super().__init__(message)
        self.depth = depth


class BudgetExceededError(GeoDPError):
    """Brute-force enumeration would exceed the configured budget."""

    exit_code = 3

    def __init__(self, message, required=None, limit=None):
        if required is not None:
            message = f"{message}: requires {required}, limit {limit}"
        super().__init__(message)
        self.required = required
        self.limit = limit


class UnsupportedError(GeoDPError, ValueError):
    exit_code = 4


class DegenerateDirectionError(GeoDPError, ValueError):
    exit_code = 4


class LPIterationLimit(GeoDPError, RuntimeError):
    exit_code = 3


class LPInfeasible(GeoDPError, RuntimeError):
    exit_code = 3
