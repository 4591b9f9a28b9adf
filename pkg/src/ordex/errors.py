"""Exception hierarchy shared by every ordex module."""


class OrdexError(Exception):
    """Base class for all errors raised by ordex."""


class ArgumentError(OrdexError, ValueError):
    """An argument is outside its documented domain."""


class NumericalError(OrdexError, ArithmeticError):
    """A computation received or produced a non-finite value."""


class InsufficientData(OrdexError, ValueError):
    """Too few points or samples for the requested statistic."""


class CapacityError(OrdexError, RuntimeError):
    """The problem size exceeds what an exact routine will enumerate."""
