"""Second-variation spectra of the lamellar states on thin rectangles.

A normal perturbation of the k equally spaced flat interfaces decomposes
into an interface-wise constant part (the zero mode) plus transverse
cosines cos(q pi x / eps). The two families decouple, and each cosine
frequency decouples from the others, so positivity of the second variation
reduces to positive definiteness of one small matrix per block:

  zero mode:   (2 gamma eps / k) * M, M tridiagonal with diagonal 2 and
               off-diagonal 1 in the partial-sum coordinates, acting on
               interface shifts that sum to zero;
  frequency q: S_q = (eps/2) * ((mu^2 - 2 gamma / k) I + 8 gamma G_mu),
               mu = q pi / eps, with G_mu the Neumann Green matrix of
               -d^2/dy^2 + mu^2 on (0,1) evaluated at the interfaces.

M is always positive definite (eigenvalues 2 + 2 cos(j pi / k)), and
mu^2 > 2 gamma / k forces S_q positive, so only finitely many frequencies
can destabilize; thin enough rectangles are stable, and the exact
threshold in eps is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core1d import ProblemParams, lamellar_jumps
from .errors import BracketFailure, ConstraintViolation, NonConvergence, NotSymmetric

try:  # pragma: no cover - exercised implicitly by every eigen call
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


# ------------------------------------------------------------ eigen-solver


@njit(cache=True)
def _jacobi_inplace(a: np.ndarray, stop_off: float, max_sweeps: int) -> int:
    """Cyclic-by-rows Jacobi rotations until the off-diagonal Frobenius norm
    drops below stop_off. Returns sweeps used, or -1 on failure."""
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        off = math.sqrt(2.0 * off)
        if off <= stop_off:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for i in range(n):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for i in range(n):
                    api = a[p, i]
                    aqi = a[q, i]
                    a[p, i] = c * api - s * aqi
                    a[q, i] = s * api + c * aqi
    return -1


def jacobi_eigenvalues(matrix: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    """All eigenvalues of a small symmetric matrix, ascending.

    Raises NotSymmetric on asymmetric input and NonConvergence if the sweep
    budget runs out (does not happen for the sizes this library builds).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if float(np.max(np.abs(a - a.T))) > 1e-12 * max(1.0, scale):
        raise NotSymmetric("matrix is not symmetric")
    n = a.shape[0]
    if n == 1:
        return a[0].copy()
    stop_off = max(1e-13, 1e-15 * float(np.linalg.norm(a)))
    sweeps = _jacobi_inplace(a, stop_off, max_sweeps)
    if sweeps < 0:
        raise NonConvergence(f"Jacobi sweeps exhausted at size {n}")
    return np.sort(np.diag(a))


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(jacobi_eigenvalues(matrix)[0])


# ------------------------------------------------------------ Green matrix


def green_matrix(mu: float, positions: np.ndarray) -> np.ndarray:
    """Neumann Green matrix of -d^2/dy^2 + mu^2 on (0,1) at the given points.

    Closed form cosh(mu*min) cosh(mu*(1-max)) / (mu sinh mu), evaluated in
    the overflow-free boundary-image arrangement
        e^{-mu d} (1+e^{-2 mu a})(1+e^{-2 mu b}) / (2 mu (1 - e^{-2 mu})),
    a = min, b = 1-max, d = max-min. Below mu = 1e-6 the series
    1/mu^2 + (a^2+b^2)/2 - 1/6 takes over (the constant mode carries the
    1/mu^2 divergence; the remainder is the zero-mean Neumann kernel).
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    pos = np.asarray(positions, dtype=float)
    s = pos[:, None]
    t = pos[None, :]
    a = np.minimum(s, t)
    b = 1.0 - np.maximum(s, t)
    d = np.abs(s - t)
    if mu < 1e-6:
        return 1.0 / (mu * mu) + 0.5 * (a * a + b * b) - 1.0 / 6.0
    denom = 2.0 * mu * (-math.expm1(-2.0 * mu))
    return np.exp(-mu * d) * (1.0 + np.exp(-2.0 * mu * a)) * (1.0 + np.exp(-2.0 * mu * b)) / denom


# ------------------------------------------------------------- form blocks


@dataclass(frozen=True)
class ZeroModeForm:
    """Quadratic form of interface-wise constant perturbations summing to
    zero, in partial-sum coordinates alpha_i = a_1 + ... + a_i."""

    k: int
    prefactor: float  # 2 gamma eps / k
    matrix: np.ndarray  # (k-1) x (k-1) tridiagonal, diagonal 2, off-diagonal 1

    def value(self, a: np.ndarray) -> float:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.k,):
            raise ConstraintViolation(f"expected {self.k} interface shifts")
        if abs(a.sum()) > 1e-10:
            raise ConstraintViolation("interface shifts must sum to zero")
        alpha = np.cumsum(a)[: self.k - 1]
        return self.prefactor * float(alpha @ self.matrix @ alpha)

    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the tridiagonal matrix itself (prefactor excluded)."""
        return jacobi_eigenvalues(self.matrix)


def zero_mode_form(k: int, params: ProblemParams) -> ZeroModeForm:
    if k < 2:
        raise ValueError("the zero-mode block needs k >= 2")
    m = 2.0 * np.eye(k - 1) + np.diag(np.ones(k - 2), 1) + np.diag(np.ones(k - 2), -1)
    return ZeroModeForm(k=k, prefactor=2.0 * params.gamma * params.eps / k, matrix=m)


@dataclass(frozen=True)
class ModeForm:
    """Quadratic form of the transverse cosine block at frequency q."""

    k: int
    q: int
    mu: float
    matrix: np.ndarray  # k x k, includes the eps/2 prefactor

    def value(self, c: np.ndarray) -> float:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.k,):
            raise ConstraintViolation(f"expected {self.k} cosine amplitudes")
        return float(c @ self.matrix @ c)


def mode_matrix(k: int, q: int, params: ProblemParams) -> ModeForm:
    """S_q = (eps/2) ((mu^2 - 2 gamma/k) I + 8 gamma G_mu), mu = q pi / eps."""
    if k < 1 or q < 1:
        raise ValueError("need k >= 1 and q >= 1")
    mu = q * math.pi / params.eps
    g = green_matrix(mu, lamellar_jumps(k))
    s = (mu * mu - 2.0 * params.gamma / k) * np.eye(k) + 8.0 * params.gamma * g
    return ModeForm(k=k, q=q, mu=mu, matrix=0.5 * params.eps * s)


def mode_cutoff(k: int, params: ProblemParams) -> int:
    """Frequencies above this ceiling have mu^2 > 2 gamma / k, hence are
    positive definite outright; at least 1 so a diagnostic block exists."""
    return max(1, math.ceil(params.eps / math.pi * math.sqrt(2.0 * params.gamma / k)))


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    worst_block: str
    min_eig: float
    q_max: int
    sufficient_bound: float  # pi sqrt(k / (2 gamma)): stability certified below


def is_stable(k: int, params: ProblemParams) -> StabilityReport:
    """Strict positivity of every second-variation block at the k-interface
    state on the width-eps rectangle. m = 0 and gamma > 0 only."""
    if params.m != 0.0:
        raise ValueError("lamellar stability spectra require m = 0")
    if params.gamma <= 0.0:
        raise ValueError("gamma must be positive; gamma = 0 has neutral modes")
    blocks: list[tuple[str, float]] = []
    if k >= 2:
        zm = zero_mode_form(k, params)
        blocks.append(("zero", zm.prefactor * float(zm.eigenvalues()[0])))
    q_max = mode_cutoff(k, params)
    for q in range(1, q_max + 1):
        blocks.append((f"q={q}", min_eigenvalue(mode_matrix(k, q, params).matrix)))
    worst_block, min_eig = min(blocks, key=lambda item: item[1])
    bound = math.pi * math.sqrt(k / (2.0 * params.gamma))
    return StabilityReport(
        stable=bool(min_eig > 0.0),
        worst_block=worst_block,
        min_eig=min_eig,
        q_max=q_max,
        sufficient_bound=bound,
    )


def epsilon_star(
    k: int,
    gamma: float,
    m: float = 0.0,
    rtol: float = 1e-9,
    ceiling_factor: float = 10.0,
) -> float:
    """Exact stability threshold in eps, by bisection.

    The certified-stable width pi sqrt(k/(2 gamma)) seeds the bracket from
    below; the first unstable width found by geometric scanning seeds it
    from above. BracketFailure if no instability appears below
    ceiling_factor times the certified width (and immediately for
    gamma <= 0, where no width is ever unstable).
    """
    if gamma <= 0.0:
        raise BracketFailure("no instability exists for gamma <= 0")
    bound = math.pi * math.sqrt(k / (2.0 * gamma))
    ceiling = ceiling_factor * bound

    def stable_at(eps: float) -> bool:
        return is_stable(k, ProblemParams(gamma=gamma, m=m, eps=eps)).stable

    lo = bound  # certified stable: every block is positive definite here
    hi = bound * 1.3
    while stable_at(hi):
        lo = hi
        hi *= 1.3
        if hi > ceiling:
            raise BracketFailure(
                f"still stable at {ceiling:.6g} = {ceiling_factor} x the certified width"
            )
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if stable_at(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def second_variation_value(
    k: int,
    params: ProblemParams,
    a: np.ndarray | None = None,
    modes: dict[int, np.ndarray] | None = None,
) -> float:
    """Value of the second variation on a perturbation given by interface
    shifts `a` (summing to zero) plus cosine amplitude vectors per
    frequency. Blocks decouple, so the value is the sum of block values."""
    total = 0.0
    if a is not None:
        a = np.asarray(a, dtype=float)
        if a.shape != (k,):
            raise ConstraintViolation(f"expected {k} interface shifts")
        if abs(a.sum()) > 1e-10:
            raise ConstraintViolation("interface shifts must sum to zero")
        if k >= 2:
            total += zero_mode_form(k, params).value(a)
    if modes:
        for q, c in sorted(modes.items()):
            total += mode_matrix(k, int(q), params).value(np.asarray(c, dtype=float))
    return total
