"""Exception hierarchy shared across the package."""


class HidimError(Exception):
    """Base class for all errors raised by :mod:`hidim`."""


class InputError(HidimError, ValueError):
    """Malformed or out-of-contract input."""


class NonFinite(InputError):
    pass


class TiesPresent(InputError):
    pass


class InvalidRank(InputError):
    pass


class BadIndexSet(InputError):
    pass


class OutOfRange(InputError):
    pass


class UnsupportedDimension(InputError):
    pass


class CapacityExceeded(HidimError):
    """Kernel table would exceed the configured memory budget."""


class SubsetBudgetExceeded(HidimError):
    """Too many subsets for the naive enumeration path."""


class DegenerateVariance(HidimError):
    """A requested scale is zero (e.g. n = 2 with k = 2)."""


class InsufficientSample(DegenerateVariance):
    """Sample too small for every requested scale to be non-degenerate."""


class PatternInfeasible(InputError):
    """Index pattern needs more distinct indices than n provides."""


class EnumerationTooLarge(HidimError):
    pass


class MismatchFound(HidimError):
    """A closed-form moment disagrees with its brute-force value."""

    def __init__(self, identity, n, closed, brute):
        self.identity = identity
        self.n = n
        self.closed = closed
        self.brute = brute
        super().__init__(f"{identity} at n={n}: closed form {closed} != brute force {brute}")
