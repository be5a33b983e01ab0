"""Frequency-bin two-photon interference with electro-optic phase modulators."""

from freqbin.errors import DomainError, TruncationError, UndefinedResultError

__version__ = "0.1.0"

__all__ = ["DomainError", "TruncationError", "UndefinedResultError", "__version__"]
