"""Exception hierarchy shared by the library and the CLI.

The CLI maps :class:`InputError` to exit code 1 and every other
:class:`QaoaPlusError` to exit code 2.
"""


class QaoaPlusError(Exception):
    pass


class InputError(QaoaPlusError, ValueError):
    """Invalid arguments, malformed files, violated preconditions."""


class CapacityError(InputError):
    """Problem size above the dense-simulation limit."""


class GenerationError(QaoaPlusError, RuntimeError):
    """Random graph sampling ran out of attempts."""


class OptimizationError(QaoaPlusError, RuntimeError):
    """Every optimization restart failed."""


class NumericalSanityError(QaoaPlusError, ArithmeticError):
    """A computed quantity fell outside its mathematically allowed range."""
