"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class InfeasibleError(ValueError):
    """No point satisfies the stated constraints."""


class CapacityError(ValueError):
    """The requested computation exceeds the enumeration size cap."""
