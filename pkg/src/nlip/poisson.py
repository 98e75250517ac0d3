"""Spectral solver for the Neumann Poisson problem on cell-centered grids.

-lap v = rhs with homogeneous Neumann walls is diagonalized by the type-II
cosine transform: the ghost-cell reflection v_{-1} = v_0, v_n = v_{n-1}
makes cos(pi p (i + 1/2) / n) an exact eigenvector of the per-axis second
difference with eigenvalue (2 - 2 cos(pi p / n)) / h^2. Dividing transform
coefficients by the summed eigenvalues and zeroing the constant mode gives
the unique zero-mean discrete solution. Even reflection across a wall is a
symmetry of this discretization to rounding error, which the energy
bookkeeping elsewhere relies on.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .errors import NonZeroMean
from .fields import GridSpec, ScalarField, SpinField

MEAN_TOL = 1e-10


def _eigenvalues(grid: GridSpec) -> np.ndarray:
    """Discrete Neumann Laplacian eigenvalues, one per cosine mode."""
    lam = np.zeros(grid.counts)
    for axis, (n, h) in enumerate(zip(grid.counts, grid.spacings)):
        shape = [1] * grid.ndim
        shape[axis] = n
        per_axis = (2.0 - 2.0 * np.cos(np.pi * np.arange(n) / n)) / (h * h)
        lam = lam + per_axis.reshape(shape)
    return lam


def solve_neumann(rhs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Array-level solve; assumes the right-hand side has zero discrete mean
    (any residual constant component is projected out with the zero mode)."""
    coeff = dctn(rhs, type=2)
    lam = _eigenvalues(grid)
    lam.flat[0] = 1.0  # placeholder; the constant mode is zeroed next
    coeff = coeff / lam
    coeff.flat[0] = 0.0
    return idctn(coeff, type=2)


def solve_poisson(rhs: ScalarField) -> ScalarField:
    """Zero-mean solution of -lap v = rhs with Neumann walls.

    Raises NonZeroMean when the discrete compatibility condition fails:
    the Neumann problem is solvable only for mean-free right-hand sides.
    """
    mean = rhs.mean()
    scale = max(1.0, float(np.max(np.abs(rhs.values))) if rhs.values.size else 1.0)
    if abs(mean) > MEAN_TOL * scale:
        raise NonZeroMean(f"rhs mean {mean} exceeds tolerance {MEAN_TOL * scale}")
    return ScalarField(rhs.grid, solve_neumann(rhs.values, rhs.grid))


def nonlocal_energy(u: SpinField, gamma: float) -> float:
    """gamma * sum of v * (u - m) * cell_volume, v the potential of u - m.

    The realizable cell average can differ from m by up to one cell's worth
    of mass; that constant offset is orthogonal to the zero-mean potential,
    so it is projected off the right-hand side before the solve and changes
    neither v nor the sum. A larger offset violates the mass invariant and
    raises NonZeroMean.
    """
    rhs = u.values - u.m
    mean = float(rhs.mean())
    if abs(mean) > 2.0 / u.grid.n_cells + 1e-15:
        raise NonZeroMean(f"spin field violates its mass invariant by {mean}")
    v = solve_neumann(rhs - mean, u.grid)
    return float(gamma) * float(np.sum(v * (rhs - mean))) * u.grid.cell_volume


def potential_of(u: SpinField) -> ScalarField:
    """The zero-mean potential field of u - m (mass offset projected)."""
    rhs = u.values - u.m
    return ScalarField(u.grid, solve_neumann(rhs - float(rhs.mean()), u.grid))
