"""Exception hierarchy shared across the package.

Dimension/validation problems raise plain ``ValueError`` so they stay
distinguishable from numerical-structure failures.
"""


class RobustDesignError(Exception):
    """Base class for package-specific errors."""


class SingularStructureError(RobustDesignError):
    """A matrix that must be positive definite failed its factorization."""


class EnumerationBudgetError(RobustDesignError):
    """An exhaustive search would exceed the configured candidate budget."""


class DegenerateReferenceError(RobustDesignError):
    """An efficiency ratio was requested against a singular reference design."""


class ConfigError(RobustDesignError):
    """An experiment configuration is malformed; the message names the field."""
