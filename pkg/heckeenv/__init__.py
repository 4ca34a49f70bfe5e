"""Hecke eigenvalues of the discriminant form, polynomial envelopes of |lambda(n)|^(2r) and their statistics."""
from .envelope import Family, Role, envelope_coefficients, exponents, optimize_parameters, verify_envelope
from .errors import HeckeEnvError
from .hecke_core import Backend, CoefficientTable, build_coefficient_table, eigenvalue, read_cache, write_cache

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CoefficientTable",
    "Family",
    "HeckeEnvError",
    "Role",
    "build_coefficient_table",
    "eigenvalue",
    "envelope_coefficients",
    "exponents",
    "optimize_parameters",
    "read_cache",
    "verify_envelope",
    "write_cache",
]
