"""Desk-scale coarse geometry: cube complexes, d_L metrics, quasi-rulers, medians and tree boundaries."""

from coarsegeom.errors import CapExceeded, CoarsegeomError, ValidationError

__all__ = ["CapExceeded", "CoarsegeomError", "ValidationError"]
__version__ = "0.1.0"
