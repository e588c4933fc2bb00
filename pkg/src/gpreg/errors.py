"""Exception types raised by gpreg."""


class GPRegError(Exception):
    """Base class for all gpreg errors."""


class InputError(GPRegError, ValueError):
    """Malformed or inconsistent user input (shapes, ranges, duplicates)."""


class NumericalError(GPRegError, ArithmeticError):
    """A computation failed numerically, e.g. every optimizer restart failed.

    ``trace`` carries whatever partial diagnostics were gathered before the
    failure so callers can report them.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
