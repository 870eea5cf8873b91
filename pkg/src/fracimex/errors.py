"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConditioningError(DomainError):
    """A correction system was refused because it would be too ill-conditioned."""


class ConfigError(ValueError):
    """A scheme configuration is inconsistent with the problem it is applied to."""


class SingularMatrixError(ArithmeticError):
    """Elimination met a pivot that is numerically zero."""
