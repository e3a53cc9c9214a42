"""Exception hierarchy.

Every error belongs to one of three families, which the CLI maps onto exit
codes: configuration problems (2), data problems (3) and numerical problems
(4).
"""


class CavReboundError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(CavReboundError):
    exit_code = 2


class DataError(CavReboundError):
    exit_code = 3


class NumericError(CavReboundError):
    exit_code = 4


# configuration
class InvalidConfig(ConfigError):
    pass


# data
class FileNotFound(DataError):
    def __init__(self, path):
        super().__init__(f"input file not found: {path}")
        self.path = str(path)


class MissingColumn(DataError):
    def __init__(self, path, columns):
        cols = ", ".join(columns)
        super().__init__(f"{path}: missing required column(s): {cols}")
        self.path = str(path)
        self.columns = list(columns)


class MalformedRow(DataError):
    """A single unparseable row. Collected rather than raised, unless the
    malformed share of a file crosses the abort threshold."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line
        self.message = message


class MalformedData(DataError):
    def __init__(self, path, n_errors, n_rows, first=None):
        msg = f"{path}: {n_errors} malformed row(s) out of {n_rows}"
        if first is not None:
            msg += f" (first: {first})"
        super().__init__(msg)
        self.n_errors = n_errors
        self.n_rows = n_rows


class UnknownBracketCode(DataError):
    pass


class UnknownCategoryLevel(DataError):
    def __init__(self, control, level):
        super().__init__(f"control {control!r}: unknown level {level!r}")
        self.control = control
        self.level = level


class EmptyFleet(DataError):
    pass


class InvalidMpg(DataError):
    pass


class NoTravel(DataError):
    pass


class NonPositiveFuelPrice(DataError):
    pass


class NonPositivePrice(DataError):
    def __init__(self, household_id, column, value):
        super().__init__(
            f"household {household_id}: {column} must be positive, got {value!r}"
        )
        self.household_id = household_id
        self.column = column
        self.value = value


class EmptyDesign(DataError):
    pass


# numerics
class DomainError(NumericError):
    pass


class RankDeficient(NumericError):
    def __init__(self, columns):
        super().__init__(
            "design matrix is rank deficient; dependent column(s): "
            + ", ".join(columns)
        )
        self.columns = list(columns)


class NonPositiveWeight(NumericError):
    pass


class SingleCluster(NumericError):
    pass


class DegenerateResponse(NumericError):
    pass


class MissingCoefficient(NumericError):
    pass


class NoFrontier(NumericError):
    pass


class NonMonotone(NumericError):
    pass


class MissingControl(DataError):
    def __init__(self, control):
        super().__init__(f"control {control!r} is missing")
        self.control = control
