"""Secret-key rates, reliability and secrecy exponents for excited sources."""

from .errors import CapacityError, DomainError, InfeasibleError

__version__ = "0.1.0"

__all__ = ["CapacityError", "DomainError", "InfeasibleError", "__version__"]
