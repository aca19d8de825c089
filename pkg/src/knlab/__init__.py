"""Retarded linearized-gravity fields, source functionals, near-field
expansion and coupling-relation ledger for a spinning charged-particle model.
"""

__version__ = "0.1.0"

from .units import ConstantsRegistry, DimQuantity, DimVec, UnitError, convert, default_registry

__all__ = [
    "ConstantsRegistry", "DimQuantity", "DimVec", "UnitError", "__version__", "convert",
    "default_registry",
]
