"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where the model is defined."""


class InternalError(RuntimeError):
    """A numerical routine reached a state its preconditions rule out."""
