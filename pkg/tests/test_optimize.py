import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diskmorse.bonds import classify_index, extract_bonds
from diskmorse.core import Configuration
from diskmorse.energy import EnergyParams, evaluate
from diskmorse.optimize import (
    CONVERGED,
    SPURIOUS,
    DescentSettings,
    NotSymmetricError,
    cg_pr_minimize_F,
    secant_line_search,
    steepest_descent_E,
    symmetric_eigenvalues,
)

from .conftest import R2


def test_settings_validation():
    with pytest.raises(ValueError):
        DescentSettings(backtrack_factor=1.5)
    with pytest.raises(ValueError):
        DescentSettings(max_iters=0)
    with pytest.raises(ValueError):
        DescentSettings(restart_interval=0)


def test_steepest_descent_single_disk():
    res = steepest_descent_E([0.2, 0.7])
    assert res.converged and res.status == CONVERGED
    assert np.allclose(res.point, [0.5, 0.5], atol=1e-9)


def test_steepest_descent_two_disks_reaches_diagonal():
    res = steepest_descent_E([0.3, 0.35, 0.6, 0.75])
    assert res.converged
    P = np.sort(res.config.centers, axis=0)
    # softened minimum is on a diagonal, symmetric about the center
    assert math.isclose(P[0, 0] + P[1, 0], 1.0, abs_tol=1e-9)
    assert math.isclose(P[0, 0], P[0, 1], abs_tol=1e-9) or math.isclose(P[0, 0], 1 - P[1, 1], abs_tol=1e-9)


def test_steepest_descent_energy_monotone():
    res = steepest_descent_E([0.2, 0.3, 0.5, 0.5, 0.7, 0.8], record=True)
    tr = np.array(res.trace)
    assert np.all(np.diff(tr) <= 1e-12 * tr[:-1])


def test_start_with_infinite_energy_rejected():
    with pytest.raises(ValueError):
        steepest_descent_E([0.3, 0.3, 0.3, 0.3])


def test_cg_on_F_finds_the_saddle_near_it(softened_n5):
    s = softened_n5["saddle_0.1942"]
    start = s.flat + 1e-3 * np.random.default_rng(0).standard_normal(10)
    res = cg_pr_minimize_F(start)
    assert res.status == CONVERGED
    assert np.abs(res.point - s.flat).max() < 1e-6
    rep = classify_index(res.config, extract_bonds(res.config, 0.05))
    assert rep.hessian_index == 1


def test_cg_reports_spurious_minima():
    # most random starts end at a positive local minimum of |grad E|^2
    statuses = []
    for seed in range(12):
        x = np.random.default_rng(seed).uniform(0.15, 0.85, 10)
        statuses.append(cg_pr_minimize_F(x).status)
    assert SPURIOUS in statuses
    for st_ in statuses:
        assert st_ in (CONVERGED, SPURIOUS, "max_iters")


def test_cg_converged_points_are_critical():
    for seed in range(40):
        x = np.random.default_rng(100 + seed).uniform(0.15, 0.85, 6)
        res = cg_pr_minimize_F(x)
        if res.converged:
            g = evaluate(res.point).gradient
            assert np.linalg.norm(g) <= 1e-6 * max(1.0, res.energy) * 1.0001


def test_secant_line_search_quadratic():
    # phi(t) = (t - 0.3)^2 on a unit direction
    phi = lambda t: ((t - 0.3) ** 2, 2 * (t - 0.3))
    t = secant_line_search(phi, 0.01, 0.09, -0.6)
    assert abs(t - 0.3) < 0.03


def test_secant_line_search_no_descent():
    phi = lambda t: (1.0 + t, 1.0)
    assert secant_line_search(phi, 0.1, 1.0, -1e-30) is None


@given(st.integers(1, 9), st.integers(0, 10_000))
def test_jacobi_matches_lapack(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k)) * 10.0 ** rng.uniform(-5, 30)
    a = a + a.T
    ours = symmetric_eigenvalues(a)
    ref = np.linalg.eigvalsh(a)
    assert np.allclose(ours, ref, atol=1e-12 * np.abs(ref).max())


def test_jacobi_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        symmetric_eigenvalues([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotSymmetricError):
        symmetric_eigenvalues(np.ones((2, 3)))
    assert np.array_equal(symmetric_eigenvalues(np.zeros((3, 3))), np.zeros(3))


def test_jacobi_on_energy_hessian_with_huge_entries(softened_n5):
    H = evaluate(softened_n5["min_0.2071"], EnergyParams(), hessian=True).hessian
    ours = symmetric_eigenvalues(H)
    ref = np.linalg.eigvalsh(H)
    assert np.allclose(ours, ref, atol=1e-12 * np.abs(ref).max())
    assert ours.min() > 0
