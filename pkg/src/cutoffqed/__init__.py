"""Multimode circuit QED of a transmon in an open 1D resonator.

Modes, resonances, Green's function, Laplace-domain qubit poles,
hybridization and spontaneous-emission dynamics, all in unitless form
(frequencies in v_p/L, lengths in L).
"""

__version__ = "0.1.0"

from .params import CircuitParams, DerivedParams, ParameterError, derive  # noqa: E402

__all__ = ["CircuitParams", "DerivedParams", "ParameterError", "derive", "__version__"]
