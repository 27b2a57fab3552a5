"""Exception types raised across the package."""


class MppcNrfError(Exception):
    """Base class for package errors."""


class ValidationError(MppcNrfError, ValueError):
    """Inputs violate a documented precondition."""


class TruncationError(MppcNrfError, ArithmeticError):
    """Fock truncation discards more probability mass than allowed."""


class DimensionMismatchError(ValidationError):
    """Response matrix does not cover the photon-number range of a state."""


class UndefinedNRFError(MppcNrfError, ArithmeticError):
    """NRF requested where the mean total photocount is zero."""


class DegenerateDataError(ValidationError):
    """Data carries too little information for the requested estimate."""


class ConvergenceError(MppcNrfError, ArithmeticError):
    """Optimizer hit its iteration cap without meeting a stopping rule."""


class CSVParseError(ValidationError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
