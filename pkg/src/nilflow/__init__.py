"""Harmonic metrics for nilpotent monodromy: exact sl2 data, the model metric, grid solvers."""

from . import errors, flow, h0, lie, numlin, psym

__version__ = "0.1.0"

__all__ = ["errors", "flow", "h0", "lie", "numlin", "psym", "__version__"]
