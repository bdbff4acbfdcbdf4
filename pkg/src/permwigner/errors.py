"""Exception types shared across the package."""


class PermWignerError(ValueError):
    """Base class for all errors raised by this package."""


class OrderExceededError(PermWignerError):
    """A moment of higher order than the configured cap was requested."""


class BudgetExceededError(PermWignerError):
    """An exhaustive enumeration would exceed its configured budget."""


class DimensionMismatchError(PermWignerError):
    pass


class AsymmetricPermutationError(PermWignerError):
    """The permutation does not commute with the transpose."""


class ConfigError(PermWignerError):
    pass
