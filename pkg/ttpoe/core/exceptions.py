"""
Exception hierarchy shared by the tensor, control and harness layers
"""
from typing import Optional


class TTPoEError(Exception):
    """Base class for all library errors"""


class InvalidInputError(TTPoEError, ValueError):
    """Argument outside the accepted domain (empty, non-finite, nonpositive...)"""


class ShapeMismatchError(TTPoEError, ValueError):
    """Operands disagree on shape, grid or dimension count"""


class DomainError(TTPoEError, ValueError):
    """Continuous coordinate outside the rectangular grid domain"""


class IndexRangeError(TTPoEError, IndexError):
    """Discrete index outside the tensor shape"""


class DegenerateDistributionError(TTPoEError):
    """Distribution carries no mass"""


class DegenerateWeightsError(TTPoEError):
    """Importance weights cannot be normalized (every cost infinite)"""


class ConstructionError(TTPoEError):
    """Feasibility model could not be built from its predicate"""


class CapacityError(TTPoEError):
    """Dense build would exceed the configured memory limit"""

    def __init__(self, message: str, required_bytes: Optional[int] = None):
        super().__init__(message)
        self.required_bytes = required_bytes


class ConfigurationError(TTPoEError):
    """Experiment or world configuration is missing or inconsistent"""


class ModelFormatError(TTPoEError):
    """Serialized TT model is corrupt or of an unknown version"""
