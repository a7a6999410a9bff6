"""Desk-scale entropies of discrete symplectic dynamical systems."""

from .growth import EntropyEstimate, growth_rate_fit

__version__ = "0.1.0"

__all__ = ["EntropyEstimate", "growth_rate_fit", "__version__"]
