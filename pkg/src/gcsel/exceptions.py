"""Exception hierarchy shared by every module."""


class GcselError(Exception):
    """Base class for all package errors."""


class DomainError(GcselError, ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(GcselError, ArithmeticError):
    """An iterative routine hit its iteration cap without converging."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class CollinearityError(GcselError, ValueError):
    """A column is (numerically) in the span of the columns already selected."""

    def __init__(self, index, name=None):
        label = name if name is not None else index
        super().__init__(f"column {label!r} is collinear with the selected columns")
        self.index = index
        self.name = name


class SeparationError(GcselError, ArithmeticError):
    """The logistic maximum-likelihood estimate does not exist."""

    def __init__(self, candidate=None, message=None):
        if message is None:
            message = "complete or quasi-complete separation"
            if candidate is not None:
                message += f" when adding column {candidate!r}"
        super().__init__(message)
        self.candidate = candidate


class CapExceededError(GcselError, ValueError):
    """An exponential or combinatorial enumeration would exceed its cap."""


class DataError(GcselError, ValueError):
    """Malformed input data (non-numeric cells, missing values, bad shapes)."""

    def __init__(self, message, row=None, column=None):
        if row is not None or column is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)
        self.row = row
        self.column = column
