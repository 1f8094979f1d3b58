"""Exception types shared across the package."""


class ConstructionError(ValueError):
    """The requested operation does not apply to this family's kernel construction.

    Raised both for mismatches (e.g. asking for a Construction II kernel of a
    location-shift family) and for the two families where no kernel exists.
    """


class SupportError(ValueError):
    """An observation lies outside the support of the null distribution."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class KernelOverflowError(OverflowError):
    """A kernel value exceeds the representable floating point range."""

    def __init__(self, message, t=None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class QuadratureError(ArithmeticError):
    """The integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SeriesTruncationWarning(RuntimeWarning):
    """The truncated Construction III series has a non-negligible tail."""
