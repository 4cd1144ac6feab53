"""symprank: symplectic rank of bosonic states.

Williamson/Euler decompositions, non-Gaussian compression, symplectic
fidelities, doped-circuit simulation and moment-based distance bounds, with a
truncated Fock backend used as a brute-force oracle.
"""
from . import bounds, fock, gaussian, rank, simulate, symplectic
from .config import DEFAULT, Tolerances, load_tolerances
from .errors import (DegeneracyError, DomainError, LeakError, NullOutputError, NumericalError,
                     ResidualError, SymprankError, ValidationError)
from .gaussian import GaussianMoments, GaussianUnitaryDesc
from .rank import compress, symplectic_fidelity, symplectic_rank_pure
from .symplectic import euler, symplectic_eigenvalues, williamson

__version__ = "0.1.0"

__all__ = [
    "bounds", "fock", "gaussian", "rank", "simulate", "symplectic",
    "DEFAULT", "Tolerances", "load_tolerances",
    "DegeneracyError", "DomainError", "LeakError", "NullOutputError", "NumericalError",
    "ResidualError", "SymprankError", "ValidationError",
    "GaussianMoments", "GaussianUnitaryDesc",
    "compress", "symplectic_fidelity", "symplectic_rank_pure",
    "euler", "symplectic_eigenvalues", "williamson",
]
