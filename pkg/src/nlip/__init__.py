"""Sharp-interface nonlocal isoperimetric energies on thin rectangles.

Exact one-dimensional minimizer catalog, lamellar stability spectra, a
spectral Neumann Poisson solver, face-count interface energies, and a
mass-conserving spin-exchange annealer, with a CLI front end.
"""

from .core1d import (
    Potential1D,
    Profile1D,
    ProblemParams,
    criticality_residual,
    energy_1d,
    energy_gradient_jumps,
    gamma_interval,
    lamellar_energy,
    lamellar_jumps,
    lamellar_profile,
    minimize_jumps_local,
    optimal_k,
    solve_potential_1d,
)

__all__ = [
    "Potential1D",
    "Profile1D",
    "ProblemParams",
    "criticality_residual",
    "energy_1d",
    "energy_gradient_jumps",
    "gamma_interval",
    "lamellar_energy",
    "lamellar_jumps",
    "lamellar_profile",
    "minimize_jumps_local",
    "optimal_k",
    "solve_potential_1d",
]
