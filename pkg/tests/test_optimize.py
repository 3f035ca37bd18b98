import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dephcap.fock import dephasing_gram, gram_matrix
from dephcap.optimize import (
    energy_projection,
    frank_wolfe_gap,
    maximize,
    objective_gradient,
    objective_hessian,
    orthant_objective,
    richardson_gradient,
    scaled_hessian,
)

seeds = st.integers(0, 2**32 - 1)


def _interior(rng, d):
    return rng.dirichlet(np.full(d, 2.0)) + 0.01


@given(seeds, st.integers(2, 8), st.floats(0.05, 8.0))
def test_gradient_matches_richardson(seed, d, gamma):
    rng = np.random.default_rng(seed)
    p = _interior(rng, d)
    G = dephasing_gram(gamma, d)
    fd = richardson_gradient(lambda x: orthant_objective(x, G), p)
    np.testing.assert_allclose(objective_gradient(p, G), fd, rtol=1e-5, atol=1e-5)
    # coarser step as an independent sanity check
    fd4 = richardson_gradient(lambda x: orthant_objective(x, G), p, h=1e-4)
    np.testing.assert_allclose(fd, fd4, rtol=1e-4, atol=1e-4)


@given(seeds, st.integers(2, 6), st.floats(0.05, 8.0))
def test_hessian_matches_differenced_gradient(seed, d, gamma):
    rng = np.random.default_rng(seed)
    p = _interior(rng, d)
    G = dephasing_gram(gamma, d)
    h = 1e-6
    fd = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        fd[:, i] = (objective_gradient(p + e, G) - objective_gradient(p - e, G)) / (2 * h)
    H = objective_hessian(p, G)
    scale = np.max(np.abs(fd))
    assert np.max(np.abs(H - fd)) <= 1e-5 * scale
    np.testing.assert_allclose(H, H.T, atol=1e-10 * scale)
    s = np.sqrt(p)
    np.testing.assert_allclose(scaled_hessian(p, G), H * np.outer(s, s), rtol=1e-12, atol=1e-12)


def test_hessian_with_complex_gram(rng):
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    G = gram_matrix(amps).entries
    p = _interior(rng, 4)
    h = 1e-6
    fd = np.stack([(objective_gradient(p + h * e, G) - objective_gradient(p - h * e, G)) / (2 * h)
                   for e in np.eye(4)], axis=1)
    H = objective_hessian(p, G)
    assert np.max(np.abs(H - fd)) <= 1e-5 * np.max(np.abs(fd))


@given(seeds, st.integers(2, 6), st.floats(0.0, 6.0))
def test_objective_is_concave_on_simplex(seed, d, gamma):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(d))
    H = objective_hessian(np.maximum(p, 1e-6), dephasing_gram(gamma, d))
    # tangent space of the simplex
    P = np.eye(d) - 1.0 / d
    assert np.linalg.eigvalsh(P @ H @ P).max() <= 1e-6 * np.abs(H).max()


@given(seeds, st.integers(2, 7), st.floats(0.0, 6.0), st.sampled_from([None, 0.7, 1.5]))
def test_frank_wolfe_gap_bounds_suboptimality(seed, d, gamma, cap):
    rng = np.random.default_rng(seed)
    G = dephasing_gram(gamma, d)
    best = maximize(G, cap, multistarts=2, rng=rng)
    p = rng.dirichlet(np.ones(d))
    p, _ = energy_projection(p, cap)
    g = objective_gradient(p, G)
    gap = frank_wolfe_gap(g, p, cap)
    assert gap >= -1e-12
    assert best.value - orthant_objective(p, G) <= gap + 1e-9


def test_frank_wolfe_gap_uses_levels():
    g = np.array([0.0, 1.0, 5.0])
    p = np.array([1.0, 0.0, 0.0])
    assert frank_wolfe_gap(g, p, None) == 5.0
    # cap 1: best feasible mixes level 0 and 2 half and half, or level 1
    assert frank_wolfe_gap(g, p, 1.0) == pytest.approx(2.5)
    assert frank_wolfe_gap(g, p, 1.0, levels=[0, 1, 1]) == pytest.approx(5.0)


@given(seeds, st.integers(2, 10), st.floats(0.05, 4.0))
def test_energy_projection(seed, d, cap):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(d))
    p, mu = energy_projection(q, cap)
    n = np.arange(d)
    assert p.sum() == pytest.approx(1.0)
    assert n @ p <= cap + 1e-9
    assert mu >= 0
    if mu > 0:
        assert n @ p == pytest.approx(cap, abs=1e-9)
        # KL projection has the exponential-tilt form
        ratio = np.log(p / q) + mu * n
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-8)
    else:
        np.testing.assert_allclose(p, q)


def test_energy_projection_zero_cap_is_vacuum():
    p, _ = energy_projection(np.array([0.2, 0.3, 0.5]), 0.0)
    assert p[0] == pytest.approx(1.0, abs=1e-9)


def test_energy_projection_infeasible():
    with pytest.raises(ValueError):
        energy_projection(np.array([0.5, 0.5]), 0.5, levels=[1, 2])


def test_maximize_zero_noise_is_uniform():
    for d in (2, 5, 10):
        res = maximize(dephasing_gram(0.0, d))
        assert res.converged
        assert res.value == pytest.approx(math.log2(d), abs=1e-9)
        np.testing.assert_allclose(res.p, 1.0 / d, atol=1e-6)


def test_maximize_trivial_caps():
    res = maximize(dephasing_gram(1.0, 4), 0.0)
    assert res.value == 0.0 and res.p[0] == 1.0
    with pytest.raises(ValueError):
        maximize(dephasing_gram(1.0, 4), -1.0)
    assert maximize(np.ones((1, 1))).value == 0.0


def test_maximize_reports_all_starts():
    res = maximize(dephasing_gram(1.0, 6), multistarts=5, rng=np.random.default_rng(3))
    assert len(res.start_values) == 5
    assert all(res.start_converged)
    assert res.multistart_spread <= 1e-7
    assert res.gap <= 1e-9
