"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class TruncationError(ValueError):
    """A truncated bin window is too small for the requested drive."""


class UndefinedResultError(ArithmeticError):
    """The requested quantity is mathematically undefined for the inputs."""
