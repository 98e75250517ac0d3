"""Exact one-dimensional theory of lamellar minimizers.

Configurations on the unit interval are piecewise constant profiles taking
values +-1 with finitely many interior jumps. The reduced energy of such a
profile is

    E(u) = (number of jumps) + gamma * integral_0^1 v'(y)^2 dy,

where v solves the Neumann problem -v'' = u - m on (0,1) with
v'(0) = v'(1) = 0 and zero mean; solvability forces m to equal the mass
(integral) of u. Everything in this module is closed form: v is assembled
interval by interval as a piecewise quadratic, energies and gradients use
exact polynomial quadrature, and the equal-width k-jump profiles together
with their optimality windows in gamma form the minimizer catalog.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import JumpCollision, MassMismatch, NonConvergence

MASS_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Parameter bundle for the energy family.

    gamma : nonlocal coupling strength, >= 0
    m     : prescribed mass average, in (-1, 1)
    eps   : thin-domain width, > 0 (used by the 2D modules)
    ell   : number of thin axes of the box domain, 1 or 2
    """

    gamma: float
    m: float = 0.0
    eps: float = 0.1
    ell: int = 1

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not -1.0 < self.m < 1.0:
            raise ValueError(f"m must lie in (-1, 1), got {self.m}")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.ell not in (1, 2):
            raise ValueError(f"ell must be 1 or 2, got {self.ell}")


@dataclass(frozen=True)
class Profile1D:
    """Piecewise +-1 profile on (0,1) with strictly increasing interior jumps.

    The value on the first interval (0, jumps[0]) is leading_value; it
    alternates across each jump.
    """

    jumps: tuple[float, ...]
    leading_value: int = 1

    def __post_init__(self) -> None:
        if self.leading_value not in (-1, 1):
            raise ValueError("leading_value must be +1 or -1")
        js = self.jumps
        if any(not 0.0 < t < 1.0 for t in js):
            raise ValueError("jumps must lie strictly inside (0, 1)")
        if any(js[i] >= js[i + 1] for i in range(len(js) - 1)):
            raise ValueError("jumps must be strictly increasing")
        object.__setattr__(self, "jumps", tuple(float(t) for t in js))

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.concatenate(([0.0], self.jumps, [1.0]))

    @property
    def interval_values(self) -> np.ndarray:
        """Value on each of the n_jumps + 1 intervals, alternating."""
        n = len(self.jumps) + 1
        return self.leading_value * (-1.0) ** np.arange(n)

    def jump_heights(self) -> np.ndarray:
        """u(t+) - u(t-) at each jump, alternating -2/+2 times leading."""
        vals = self.interval_values
        return vals[1:] - vals[:-1]

    def mass(self) -> float:
        widths = np.diff(self.breakpoints)
        return float(np.dot(self.interval_values, widths))

    def evaluate(self, y: np.ndarray | float) -> np.ndarray:
        """Sample u at points of [0,1]; right-continuous at jumps."""
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.breakpoints, y, side="right") - 1
        idx = np.clip(idx, 0, len(self.jumps))
        return self.interval_values[idx]

    def flipped(self) -> "Profile1D":
        return Profile1D(self.jumps, -self.leading_value)


@dataclass(frozen=True)
class Potential1D:
    """Piecewise quadratic v with -v'' = u - m on each interval, v'(0) = 0,
    zero mean. Interval i covers [breakpoints[i], breakpoints[i+1]] and
    stores v(y) = a[i] + b[i]*(y - breakpoints[i]) + c[i]*(y - breakpoints[i])^2.
    """

    breakpoints: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    m: float

    def _interval_index(self, y: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, y, side="right") - 1
        return np.clip(idx, 0, len(self.a) - 1)

    def value(self, y: np.ndarray | float) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        i = self._interval_index(y)
        s = y - self.breakpoints[i]
        return self.a[i] + self.b[i] * s + self.c[i] * s * s

    def derivative(self, y: np.ndarray | float) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        i = self._interval_index(y)
        s = y - self.breakpoints[i]
        return self.b[i] + 2.0 * self.c[i] * s

    def mean(self) -> float:
        h = np.diff(self.breakpoints)
        return float(np.sum(self.a * h + self.b * h**2 / 2.0 + self.c * h**3 / 3.0))

    def dirichlet_integral(self) -> float:
        """Exact integral of v'^2 over (0,1).

        On each interval v' = b + 2c s, so the integral is
        b^2 h + 2 b c h^2 + (4/3) c^2 h^3.
        """
        h = np.diff(self.breakpoints)
        return float(
            np.sum(self.b**2 * h + 2.0 * self.b * self.c * h**2 + (4.0 / 3.0) * self.c**2 * h**3)
        )


def solve_potential_1d(u: Profile1D, m: float, tol: float = MASS_TOL) -> Potential1D:
    """Integrate -v'' = u - m twice, exactly, interval by interval.

    Raises MassMismatch unless mass(u) agrees with m to within tol, since
    otherwise v'(1) = -(mass - m) cannot vanish.
    """
    mass = u.mass()
    if abs(mass - m) > tol:
        raise MassMismatch(f"mass(u) = {mass} incompatible with m = {m}")
    bp = u.breakpoints
    rhs = u.interval_values - m  # constant value of -v'' per interval
    n = len(rhs)
    a = np.empty(n)
    b = np.empty(n)
    c = -rhs / 2.0
    va, vb = 0.0, 0.0  # v, v' at the left endpoint of the current interval
    for i in range(n):
        a[i] = va
        b[i] = vb
        h = bp[i + 1] - bp[i]
        va = va + vb * h + c[i] * h * h
        vb = vb + 2.0 * c[i] * h
    pot = Potential1D(breakpoints=bp, a=a, b=b, c=c, m=m)
    return Potential1D(breakpoints=bp, a=a - pot.mean(), b=b, c=c, m=m)


def lamellar_jumps(k: int) -> np.ndarray:
    """The k equally spaced interface positions (2j-1)/(2k), j = 1..k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (2.0 * np.arange(1, k + 1) - 1.0) / (2.0 * k)


def lamellar_profile(k: int) -> Profile1D:
    """The canonical k-interface profile: leading value +1, mass 0."""
    return Profile1D(tuple(lamellar_jumps(k)), leading_value=1)


def energy_1d(u: Profile1D, params: ProblemParams) -> float:
    """Jump count plus gamma times the exact Dirichlet integral of v."""
    if params.gamma == 0.0:
        # Still validate solvability so the functional has a consistent domain.
        solve_potential_1d(u, params.m)
        return float(u.n_jumps)
    v = solve_potential_1d(u, params.m)
    return u.n_jumps + params.gamma * v.dirichlet_integral()


def criticality_residual(u: Profile1D, m: float) -> float:
    """Max deviation of v over the jump set from its average there.

    Vanishes exactly at interior critical points of the energy under the
    mass constraint (v constant on the jump set).
    """
    if u.n_jumps == 0:
        return 0.0
    v = solve_potential_1d(u, m)
    vals = v.value(np.asarray(u.jumps))
    return float(np.max(np.abs(vals - vals.mean())))


def energy_gradient_jumps(u: Profile1D, m: float, gamma: float) -> np.ndarray:
    """dE/dt_i = -2 gamma v(t_i) [u](t_i), with [u](t_i) = u(t_i+) - u(t_i-).

    The jump count contributes nothing for interior, non-colliding jumps.
    The formula is the unconstrained derivative of the extension of E that
    resolves v against the profile's own mass; restricted to the
    mass-preserving tangent space it is the constrained gradient.
    """
    v = solve_potential_1d(u, m)
    vals = v.value(np.asarray(u.jumps))
    return -2.0 * gamma * vals * u.jump_heights()


def gamma_interval(k: int) -> tuple[float, float]:
    """Window of gamma for which the k-interface profile is the optimum.

    Endpoints 12 k^2 (k-1)^2 / (2k-1) and 12 k^2 (k+1)^2 / (2k+1); the upper
    endpoint of window k equals the lower endpoint of window k+1 exactly
    (identical integer expressions), and the lower endpoint for k = 1 is 0.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    lo = 12 * k * k * (k - 1) * (k - 1) / (2 * k - 1)
    hi = 12 * k * k * (k + 1) * (k + 1) / (2 * k + 1)
    return (lo, hi)


def optimal_k(gamma: float) -> set[int]:
    """Set of jump counts minimizing k + gamma/(12 k^2); catalog lookup.

    Singleton in the interior of each gamma window; a two-element set at the
    shared endpoints (exact floating-point ties by construction).
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    best: set[int] = set()
    k = 1
    while True:
        lo, hi = gamma_interval(k)
        if gamma < lo:
            break
        if gamma <= hi:
            best.add(k)
        k += 1
    if not best:  # cannot happen: windows tile [0, inf)
        raise AssertionError("gamma windows failed to cover input")
    return best


def lamellar_energy(k: int, gamma: float) -> float:
    """Closed form k + gamma/(12 k^2) for the catalog profiles."""
    return k + gamma / (12.0 * k * k)


def _min_gap_of(jumps: np.ndarray) -> float:
    bp = np.concatenate(([0.0], jumps, [1.0]))
    return float(np.min(np.diff(bp)))


def minimize_jumps_local(
    u0: Profile1D,
    params: ProblemParams,
    step0: float = 0.1,
    min_gap: float = 1e-6,
    tol: float = 1e-9,
    max_iters: int = 50_000,
    max_halvings: int = 60,
) -> Profile1D:
    """Projected gradient descent on the jump positions at fixed jump count.

    Steps move along the energy gradient projected onto the mass-preserving
    tangent space (mass is linear in the jumps, so projection conserves it
    exactly); a backtracking line search halves the step until the energy
    decreases. Returns a profile whose criticality residual is below tol.

    Raises JumpCollision when the entry profile, or an accepted iterate,
    brings two interfaces (or an interface and the boundary) within min_gap:
    the fixed-jump-count stratum boundary was reached. Raises NonConvergence
    when the iteration budget or the line search is exhausted first.
    """
    if abs(u0.mass() - params.m) > MASS_TOL:
        raise MassMismatch(f"mass(u0) = {u0.mass()} incompatible with m = {params.m}")
    t = np.asarray(u0.jumps, dtype=float)
    lead = u0.leading_value
    if _min_gap_of(t) < min_gap:
        raise JumpCollision(f"entry profile violates minimum gap {min_gap}")

    heights = Profile1D(tuple(t), lead).jump_heights()
    normal = -heights  # gradient of the mass with respect to each jump
    nn = float(np.dot(normal, normal))

    def make(jumps: np.ndarray) -> Profile1D:
        return Profile1D(tuple(jumps), lead)

    def restore_mass(jumps: np.ndarray) -> np.ndarray:
        # Mass is linear in the jumps with gradient `normal`; cancel the
        # O(1e-16) per-step roundoff drift so solvability never degrades.
        drift = make(jumps).mass() - params.m
        return jumps - (drift / nn) * normal

    energy = energy_1d(make(t), params)
    for _ in range(max_iters):
        u = make(t)
        if criticality_residual(u, params.m) <= tol:
            return u
        g = energy_gradient_jumps(u, params.m, params.gamma)
        g_proj = g - (np.dot(g, normal) / nn) * normal
        if not np.any(g_proj):
            # Flat direction (gamma = 0): nothing can reduce the residual.
            raise NonConvergence("projected gradient vanished above tolerance")
        eta = step0
        for _ in range(max_halvings):
            cand = restore_mass(t - eta * g_proj)
            if np.all(np.diff(cand) > 0.0) and 0.0 < cand[0] and cand[-1] < 1.0:
                cand_energy = energy_1d(make(cand), params)
                if cand_energy < energy:
                    if _min_gap_of(cand) < min_gap:
                        raise JumpCollision(
                            f"descent step crossed minimum gap {min_gap}"
                        )
                    t, energy = cand, cand_energy
                    break
            eta *= 0.5
        else:
            raise NonConvergence("line search failed to decrease the energy")
    raise NonConvergence(f"no critical point within {max_iters} iterations")
