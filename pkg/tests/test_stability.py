"""Stability spectra: eigensolver, Green matrix, form blocks, thresholds."""

import math

import numpy as np
import pytest

from nlip.core1d import ProblemParams, lamellar_jumps
from nlip.errors import BracketFailure, ConstraintViolation, NotSymmetric
from nlip.stability import (
    StabilityReport,
    epsilon_star,
    green_matrix,
    is_stable,
    jacobi_eigenvalues,
    min_eigenvalue,
    mode_cutoff,
    mode_matrix,
    second_variation_value,
    zero_mode_form,
)

# ----------------------------------------------------------------- oracles


def count_eigs_below(matrix: np.ndarray, x: float) -> int:
    """Inertia of A - x I via unpivoted LDL elimination."""
    m = matrix - x * np.eye(len(matrix))
    count = 0
    for i in range(len(m)):
        piv = m[i, i]
        if piv == 0.0:
            piv = 1e-300
        if piv < 0.0:
            count += 1
        if i + 1 < len(m):
            m[i + 1 :, i + 1 :] -= np.outer(m[i + 1 :, i], m[i, i + 1 :]) / piv
    return count


def min_eig_by_bisection(matrix: np.ndarray) -> float:
    """Smallest eigenvalue located by inertia counts on a Gershgorin bracket."""
    radii = np.sum(np.abs(matrix), axis=1) - np.abs(np.diag(matrix))
    lo = float(np.min(np.diag(matrix) - radii)) - 1.0
    hi = float(np.max(np.diag(matrix) + radii)) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if count_eigs_below(matrix, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def green_series(mu: float, positions: np.ndarray, n_terms: int = 1_000_000) -> np.ndarray:
    """Neumann eigenfunction expansion 1/mu^2 + sum 2 cos(n pi s) cos(n pi t)
    / (mu^2 + n^2 pi^2), truncated; tail is below 2/(pi^2 n_terms)."""
    positions = np.asarray(positions, dtype=float)
    n = np.arange(1, n_terms + 1)
    denom = mu * mu + (n * math.pi) ** 2
    cosines = [np.cos(n * math.pi * p) for p in positions]
    out = np.empty((len(positions), len(positions)))
    for i, ci in enumerate(cosines):
        for j, cj in enumerate(cosines):
            if j < i:
                out[i, j] = out[j, i]
            else:
                out[i, j] = 1.0 / (mu * mu) + 2.0 * float(np.sum(ci * cj / denom))
    return out


# ------------------------------------------------------------- eigensolver


def test_jacobi_matches_lapack_on_random_symmetric():
    rng = np.random.default_rng(7)
    for n in [2, 3, 5, 8, 13, 21, 64]:
        raw = rng.standard_normal((n, n))
        a = (raw + raw.T) / 2
        got = jacobi_eigenvalues(a)
        want = np.linalg.eigvalsh(a)
        assert np.allclose(got, want, atol=1e-11), f"n={n}"


def test_jacobi_handles_diagonal_and_scalar_input():
    d = np.diag([3.0, -1.0, 2.0])
    assert np.allclose(jacobi_eigenvalues(d), [-1.0, 2.0, 3.0], atol=0)
    assert jacobi_eigenvalues(np.array([[5.0]])) == pytest.approx(5.0)


def test_jacobi_rejects_bad_input():
    with pytest.raises(NotSymmetric):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetric):
        jacobi_eigenvalues(np.zeros((2, 3)))


def test_min_eigenvalue_against_inertia_bisection():
    rng = np.random.default_rng(11)
    for _ in range(20):
        raw = rng.standard_normal((8, 8))
        a = (raw + raw.T) / 2
        assert min_eigenvalue(a) == pytest.approx(min_eig_by_bisection(a), abs=1e-10)


# ------------------------------------------------------------ Green matrix


def test_green_matrix_is_symmetric_and_positive_definite():
    for mu in [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0]:
        for k in [1, 2, 5, 16]:
            g = green_matrix(mu, lamellar_jumps(k))
            assert np.max(np.abs(g - g.T)) <= 1e-14 * np.max(np.abs(g))
            np.linalg.cholesky(g)  # raises if not positive definite


def test_green_matrix_against_eigenfunction_series():
    positions = np.array([0.1, 0.37, 0.62, 0.83])
    for mu in [0.7, 3.0, 20.0]:
        got = green_matrix(mu, positions)
        want = green_series(mu, positions)
        assert np.allclose(got, want, atol=1e-6), f"mu={mu}"


def test_green_matrix_exact_values():
    # single midpoint interface at mu = 1: cosh(1/2)^2 / sinh(1)
    g = green_matrix(1.0, lamellar_jumps(1))
    assert g[0, 0] == pytest.approx(math.cosh(0.5) ** 2 / math.sinh(1.0), rel=1e-14)
    # large mu: interior diagonal entries approach the free-line value 1/(2 mu)
    g = green_matrix(50.0, lamellar_jumps(3))
    assert np.max(np.abs(np.diag(g) - 0.01)) < 1e-8


def test_green_matrix_series_branch_is_continuous():
    # the small-mu Taylor branch and the closed form agree near the switch
    positions = np.array([0.2, 0.55, 0.9])
    mu = 2e-6  # just above the switch: closed-form path
    closed = green_matrix(mu, positions)
    s, t = positions[:, None], positions[None, :]
    a, b = np.minimum(s, t), 1.0 - np.maximum(s, t)
    taylor = 1.0 / mu**2 + 0.5 * (a * a + b * b) - 1.0 / 6.0
    assert np.allclose(closed, taylor, rtol=1e-13)
    assert green_matrix(5e-7, positions)[0, 0] * 25e-14 == pytest.approx(1.0, rel=1e-9)


def test_green_matrix_rejects_nonpositive_mu():
    with pytest.raises(ValueError):
        green_matrix(0.0, lamellar_jumps(2))


# -------------------------------------------------------------- zero modes


def test_zero_mode_eigenvalue_formula():
    params = ProblemParams(gamma=3.0, eps=0.2)
    for k in [2, 3, 5, 17, 64]:
        eigs = zero_mode_form(k, params).eigenvalues()
        want = np.sort([2.0 + 2.0 * math.cos(j * math.pi / k) for j in range(1, k)])
        assert np.allclose(eigs, want, atol=1e-12), f"k={k}"


def test_zero_mode_value_identity():
    # a^T M a in partial sums equals 4 sum(alpha^2) - sum(a^2), scaled
    rng = np.random.default_rng(3)
    params = ProblemParams(gamma=7.0, eps=0.31)
    for k in [2, 3, 6, 11]:
        a = rng.standard_normal(k)
        a -= a.mean()
        form = zero_mode_form(k, params)
        alpha = np.cumsum(a)[: k - 1]
        want = form.prefactor * (4.0 * np.sum(alpha**2) - np.sum(a**2))
        assert form.value(a) == pytest.approx(want, rel=1e-12)


def test_zero_mode_two_interface_example():
    form = zero_mode_form(2, ProblemParams(gamma=1.0, eps=1.0))
    assert form.value(np.array([1.0, -1.0])) == pytest.approx(2.0, rel=1e-14)


def test_zero_mode_constraint_checks():
    form = zero_mode_form(3, ProblemParams(gamma=1.0, eps=0.1))
    with pytest.raises(ConstraintViolation):
        form.value(np.array([1.0, 0.0, 0.1]))
    with pytest.raises(ConstraintViolation):
        form.value(np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        zero_mode_form(1, ProblemParams(gamma=1.0, eps=0.1))


def test_min_eigenvalue_spot_value_k5():
    form = zero_mode_form(5, ProblemParams(gamma=1.0, eps=1.0))
    want = 2.0 + 2.0 * math.cos(4.0 * math.pi / 5.0)
    assert min_eigenvalue(form.matrix) == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.3819660112501051, abs=1e-15)


# --------------------------------------------------------- transverse modes


def test_mode_matrix_shape_and_symmetry():
    params = ProblemParams(gamma=100.0, eps=0.25)
    form = mode_matrix(3, 2, params)
    assert form.matrix.shape == (3, 3)
    assert form.mu == pytest.approx(2.0 * math.pi / 0.25)
    assert np.allclose(form.matrix, form.matrix.T, atol=0)
    c = np.array([0.3, -0.2, 0.5])
    assert form.value(c) == pytest.approx(float(c @ form.matrix @ c))


def test_mode_matrix_positive_above_cutoff():
    params = ProblemParams(gamma=1000.0, eps=0.3)
    q_max = mode_cutoff(3, params)
    for q in [q_max + 1, q_max + 2, q_max + 5]:
        assert min_eigenvalue(mode_matrix(3, q, params).matrix) > 0.0


def test_mode_cutoff_formula():
    params = ProblemParams(gamma=1000.0, eps=0.3)
    want = math.ceil(0.3 / math.pi * math.sqrt(2000.0 / 3.0))
    assert mode_cutoff(3, params) == want
    assert mode_cutoff(5, ProblemParams(gamma=1e-6, eps=0.01)) == 1


def test_mode_value_input_validation():
    form = mode_matrix(2, 1, ProblemParams(gamma=10.0, eps=0.2))
    with pytest.raises(ConstraintViolation):
        form.value(np.array([1.0, 2.0, 3.0]))


# ------------------------------------------------------ stability verdicts


def test_stable_below_certified_width():
    rng = np.random.default_rng(5)
    for _ in range(8):
        k = int(rng.integers(1, 7))
        gamma = float(rng.uniform(1.0, 5000.0))
        eps = 0.99 * math.pi * math.sqrt(k / (2.0 * gamma))
        report = is_stable(k, ProblemParams(gamma=gamma, eps=eps))
        assert report.stable
        assert report.min_eig > 0.0
        assert report.q_max >= 1
        assert report.sufficient_bound == pytest.approx(eps / 0.99, rel=1e-12)


def test_is_stable_validation():
    with pytest.raises(ValueError):
        is_stable(2, ProblemParams(gamma=10.0, m=0.2, eps=0.1))
    with pytest.raises(ValueError):
        is_stable(2, ProblemParams(gamma=0.0, eps=0.1))


def test_epsilon_star_brackets_the_transition():
    star = epsilon_star(1, 100.0)
    assert star >= math.pi * math.sqrt(1.0 / 200.0)
    assert is_stable(1, ProblemParams(gamma=100.0, eps=star * (1 - 1e-6))).stable
    assert not is_stable(1, ProblemParams(gamma=100.0, eps=star * (1 + 1e-6))).stable


def test_epsilon_star_dominates_certified_width():
    # threshold, when one exists, lies above the certified width; when no
    # instability exists below the scan ceiling the domination is immediate
    rng = np.random.default_rng(13)
    for _ in range(5):
        k = int(rng.integers(1, 6))
        gamma = float(rng.uniform(5.0, 2000.0))
        try:
            star = epsilon_star(k, gamma)
        except BracketFailure:
            continue  # certified stable through 10x the bound
        assert star >= math.pi * math.sqrt(k / (2.0 * gamma))


def test_no_threshold_exists_below_critical_gamma():
    # small gamma never destabilizes: every admissible frequency block stays
    # positive definite at every width, so the search must report failure
    with pytest.raises(BracketFailure):
        epsilon_star(1, 8.0)
    for eps in [0.79, 2.0, 5.0]:  # slightly above pi/4 and far beyond
        assert is_stable(1, ProblemParams(gamma=8.0, eps=eps)).stable


def test_epsilon_star_requires_positive_gamma():
    with pytest.raises(BracketFailure):
        epsilon_star(2, 0.0)
    with pytest.raises(BracketFailure):
        epsilon_star(2, -3.0)


# --------------------------------------------------------- combined values


def test_second_variation_blocks_add():
    params = ProblemParams(gamma=50.0, eps=0.2)
    rng = np.random.default_rng(17)
    a = rng.standard_normal(3)
    a -= a.mean()
    modes = {1: rng.standard_normal(3), 2: rng.standard_normal(3)}
    total = second_variation_value(3, params, a=a, modes=modes)
    parts = (
        second_variation_value(3, params, a=a)
        + second_variation_value(3, params, modes={1: modes[1]})
        + second_variation_value(3, params, modes={2: modes[2]})
    )
    assert total == pytest.approx(parts, rel=1e-12)


def test_second_variation_positive_when_stable():
    k, gamma = 3, 200.0
    eps = 0.9 * math.pi * math.sqrt(k / (2.0 * gamma))
    params = ProblemParams(gamma=gamma, eps=eps)
    rng = np.random.default_rng(23)
    for _ in range(10):
        a = rng.standard_normal(k)
        a -= a.mean()
        modes = {q: rng.standard_normal(k) for q in (1, 2)}
        assert second_variation_value(k, params, a=a, modes=modes) > 0.0


def test_second_variation_negative_direction_when_unstable():
    k, gamma = 1, 100.0
    eps = math.pi / 5.92  # puts the q=1 frequency deep in the unstable window
    params = ProblemParams(gamma=gamma, eps=eps)
    report = is_stable(k, params)
    assert not report.stable
    q = int(report.worst_block.split("=")[1])  # worst block is never "zero"
    s = mode_matrix(k, q, params).matrix
    eigvals, eigvecs = np.linalg.eigh(s)
    direction = eigvecs[:, 0]
    assert eigvals[0] < 0.0
    assert second_variation_value(k, params, modes={q: direction}) < 0.0


def test_second_variation_constraint_violation():
    params = ProblemParams(gamma=10.0, eps=0.1)
    with pytest.raises(ConstraintViolation):
        second_variation_value(3, params, a=np.array([1.0, 0.0, 0.5]))


def test_stability_report_is_plain_data():
    report = is_stable(2, ProblemParams(gamma=25.0, eps=0.1))
    assert isinstance(report, StabilityReport)
    assert isinstance(report.worst_block, str)
    assert report.q_max == mode_cutoff(2, ProblemParams(gamma=25.0, eps=0.1))
