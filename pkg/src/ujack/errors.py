"""Exception hierarchy shared by all ujack modules."""


class UjackError(Exception):
    """Base class for every error raised by ujack."""


class InputError(UjackError, ValueError):
    """Malformed user input (files, parameters, flags)."""


class MissingColumn(InputError):
    def __init__(self, column):
        super().__init__(f"column {column!r} not found in header")
        self.column = column


class ParseError(InputError):
    def __init__(self, row, col, text):
        super().__init__(f"row {row}, column {col!r}: cannot parse {text!r} as a real number")
        self.row = row
        self.col = col


class NonFiniteValue(InputError):
    def __init__(self, row, col):
        super().__init__(f"row {row}, column {col!r}: value is not finite")
        self.row = row
        self.col = col


class EmptyFile(InputError):
    pass


class InvalidParameter(InputError):
    pass


class SampleTooSmall(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NonPositiveScale(InputError):
    pass


class BudgetExceeded(UjackError):
    """An exact enumeration would exceed its configured budget."""


class NotCentered(UjackError):
    """Degeneracy classification requires a kernel with zero full mean."""


class DegenerateConfiguration(UjackError):
    """Base for configurations that carry no information (exit code 3)."""


class DegenerateNormalizer(DegenerateConfiguration):
    def __init__(self, index, value, floor):
        super().__init__(
            f"normalizing constant for theta #{index} is {value!r} (floor {floor!r})"
        )
        self.index = index


class AllThetaDegenerate(DegenerateConfiguration):
    pass
