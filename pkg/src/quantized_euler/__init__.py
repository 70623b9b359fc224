"""Structure-preserving simulation of 2D Euler flow on the sphere in su(N)."""

__version__ = "0.1.0"

from .basis import (
    QuantBasis,
    SpectralCoeffs,
    build_basis,
    coeffs_to_matrix,
    load_basis,
    matrix_to_coeffs,
    save_basis,
)
from .integrators import (
    Diagnostics,
    NonConvergence,
    SimState,
    diagnostics,
    heun_step,
    isomp_step,
    predicted_regime,
    time_scale,
)
from .laplacian import LaplacianOperator, apply_laplacian, build_laplacian, solve_poisson
from .wigner import wigner3j

__all__ = [
    "QuantBasis",
    "SpectralCoeffs",
    "build_basis",
    "coeffs_to_matrix",
    "matrix_to_coeffs",
    "load_basis",
    "save_basis",
    "LaplacianOperator",
    "build_laplacian",
    "apply_laplacian",
    "solve_poisson",
    "SimState",
    "Diagnostics",
    "NonConvergence",
    "isomp_step",
    "heun_step",
    "time_scale",
    "diagnostics",
    "predicted_regime",
    "wigner3j",
]
