"""Exception hierarchy shared by all platelab modules."""


class PlatelabError(Exception):
    """Base class for every error raised by platelab."""


class InvalidInputError(PlatelabError, ValueError):
    pass


class RangeError(PlatelabError, ValueError):
    """A request falls outside a tabulated or supported range."""


class DivergenceError(PlatelabError, ArithmeticError):
    """The initial value problem produced a non-finite state."""

    def __init__(self, message, last_r):
        super().__init__(f"{message} (last valid r = {last_r!r})")
        self.last_r = last_r


class NoZeroError(PlatelabError):
    """A shooting trajectory has no first zero before r_max."""

    def __init__(self, message, beta=None, reason=None):
        super().__init__(message)
        self.beta = beta
        self.reason = reason


class NoSolutionError(PlatelabError):
    """No sign change of the Steklov residual was found in the scan."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class NoDataError(PlatelabError):
    pass


class OutOfPositivityWindowError(PlatelabError, ValueError):
    """The quadratic form is not positive definite for the requested parameters."""


class OutOfRangeError(PlatelabError, ValueError):
    """A relation was requested outside the parameter range where it is meaningful."""


class NumericalError(PlatelabError, ArithmeticError):
    pass
