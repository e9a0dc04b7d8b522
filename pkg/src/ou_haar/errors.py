class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(RuntimeError):
    """The object is not in the state the operation requires."""
