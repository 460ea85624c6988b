import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diskmorse.core import Configuration, apply_symmetry, square_group
from diskmorse.energy import EnergyDomainError, EnergyParams, energy, evaluate, grad_norm_sq, gradient, hessian

from .conftest import random_spread


def hand_energy(P, h):
    """Direct transcription of the energy for an oracle comparison."""
    e = 0.0
    n = len(P)
    for i in range(n):
        for j in range(i + 1, n):
            d = math.dist(P[i], P[j])
            e += (d / 2) ** (-h)
        x, y = P[i]
        e += x ** (-h) + (1 - x) ** (-h) + y ** (-h) + (1 - y) ** (-h)
    return e


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(h=1.0)
    with pytest.raises(ValueError):
        EnergyParams(n=0)


@pytest.mark.parametrize("h", [2.0, 7.5, 50.0])
def test_energy_matches_direct_sum(h):
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = random_spread(rng, 4)
        assert math.isclose(energy(c, EnergyParams(h)), hand_energy(c.centers, h), rel_tol=1e-12)


def test_single_disk_minimum_at_center():
    c = Configuration([[0.5, 0.5]])
    assert np.allclose(gradient(c), 0.0, atol=1e-6)
    assert math.isclose(energy(c), 4 * 0.5 ** (-50), rel_tol=1e-14)


def test_domain_errors():
    with pytest.raises(EnergyDomainError):
        evaluate(Configuration([[0.0, 0.5]]))
    with pytest.raises(EnergyDomainError):
        evaluate(Configuration([[0.3, 0.3], [0.3, 0.3]]))


def central_gradient(x, p, step=1e-7):
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (evaluate(x + e, p).value - evaluate(x - e, p).value) / (2 * step)
    return g


def central_hessian(x, p, step=1e-6):
    H = np.empty((x.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        H[:, k] = (evaluate(x + e, p).gradient - evaluate(x - e, p).gradient) / (2 * step)
    return H


def test_finite_difference_small_hardness():
    p = EnergyParams(6.0)
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = random_spread(rng, 3).flat
        ev = evaluate(x, p, hessian=True)
        assert np.allclose(ev.gradient, central_gradient(x, p), rtol=1e-6, atol=1e-6 * np.abs(ev.gradient).max())
        assert np.allclose(ev.hessian, central_hessian(x, p), rtol=1e-5, atol=1e-5 * np.abs(ev.hessian).max())


def test_hessian_is_symmetric():
    H = hessian(random_spread(np.random.default_rng(2), 5))
    assert np.array_equal(H, H.T)


def test_grad_norm_sq_gradient():
    p = EnergyParams(8.0)
    x = random_spread(np.random.default_rng(4), 3).flat
    F, gF = grad_norm_sq(x, p)
    assert math.isclose(F, float(gradient(x, p) @ gradient(x, p)))
    fd = np.array(
        [(grad_norm_sq(x + 1e-7 * e, p)[0] - grad_norm_sq(x - 1e-7 * e, p)[0]) / 2e-7 for e in np.eye(x.size)]
    )
    assert np.allclose(gF, fd, rtol=1e-5, atol=1e-5 * np.abs(gF).max())


@given(st.integers(0, 7), st.integers(0, 10_000))
def test_energy_is_invariant_under_the_group(gi, seed):
    rng = np.random.default_rng(seed)
    c = random_spread(rng, 4)
    perm = rng.permutation(4)
    img = apply_symmetry(c, square_group()[gi], perm)
    assert math.isclose(energy(c), energy(img), rel_tol=1e-11)
