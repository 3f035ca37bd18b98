import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dephcap.entropy import TripartiteState, binary_entropy, shannon_entropy
from dephcap.markov import (
    S_E_F,
    S_F_E,
    MarkovOrder,
    apply_isometry,
    copying_isometry,
    is_qmc,
    is_sqmc,
    orthogonality_defect,
    pure_cq,
    qmc_example,
    qmc_example_reversed,
    random_density,
    random_isometry,
    random_unitary,
    sqmc_example,
    sqmci_example_isometry,
    sqmci_halving_check,
    squashed_information_sum,
)

seeds = st.integers(0, 2**32 - 1)


def _product(rng, dims=(2, 2, 2)):
    a, b, c = (random_density(k, rng) for k in dims)
    return TripartiteState.from_array(np.kron(np.kron(a, b), c), dims)


def test_markov_order():
    assert MarkovOrder.parse("S-E'-F'") == S_E_F
    assert str(S_F_E) == "S-F-E" and S_F_E.middle == "F"
    for bad in (("S", "S", "E"), ("S", "E"), ("S", "E", "X")):
        with pytest.raises(ValueError):
            MarkovOrder(bad)


@given(seeds)
def test_qmc_examples(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    fwd = qmc_example(p, [random_density(2, rng) for _ in p])
    ok, cmi = is_qmc(fwd, S_E_F)
    assert ok and abs(cmi) <= 1e-10
    rev = qmc_example_reversed(p, [random_density(2, rng) for _ in p])
    ok, cmi = is_qmc(rev, S_F_E)
    assert ok and abs(cmi) <= 1e-10


def test_qmc_example_one_order_only(rng):
    p = np.full(3, 1 / 3)
    etas = [random_density(2, rng) for _ in p]
    state = qmc_example(p, etas)
    assert is_qmc(state, S_E_F)[0]
    # distinct eta_n leave F' correlated with S given E' only through E', not vice versa
    assert not is_qmc(state, S_F_E)[0]
    assert not is_sqmc(state)


def test_random_state_is_not_qmc(rng):
    state = TripartiteState.from_array(random_density(8, rng), (2, 2, 2))
    assert not is_qmc(state, S_E_F)[0]


@given(seeds)
def test_sqmc_example(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    state = sqmc_example(p, [random_density(2, rng) for _ in p])
    assert is_sqmc(state)
    for order in (S_E_F, S_F_E):
        assert abs(is_qmc(state, order)[1]) <= 1e-10
    rep = sqmci_halving_check(state)
    assert rep.holds and rep.residual <= 1e-10


def test_product_state_is_sqmc(rng):
    state = _product(rng)
    assert is_sqmc(state)
    rep = sqmci_halving_check(state)
    assert rep.i_se == pytest.approx(0.0, abs=1e-10) and rep.i_sf == pytest.approx(0.0, abs=1e-10)


def test_copied_classical_bit(rng):
    p = 0.3
    rho = np.zeros((8, 8))
    rho[0, 0], rho[7, 7] = 1 - p, p
    state = TripartiteState.from_array(rho, (2, 2, 2))
    rep = sqmci_halving_check(state)
    assert rep.i_se == pytest.approx(binary_entropy(p))
    assert rep.i_sf == pytest.approx(binary_entropy(p))
    assert rep.half_sum == pytest.approx(binary_entropy(p))


def test_halving_rejects_non_sqmc(rng):
    state = TripartiteState.from_array(random_density(8, rng), (2, 2, 2))
    with pytest.raises(ValueError, match="symmetric"):
        sqmci_halving_check(state)


def test_isometry_example_two_labels():
    state = sqmci_example_isometry(pure_cq([0.5, 0.5], np.eye(2)))
    for order in (S_E_F, S_F_E):
        assert abs(is_qmc(state, order)[1]) <= 1e-12
    assert sqmci_halving_check(state).i_se == pytest.approx(1.0)


@given(seeds)
def test_isometry_example_random_basis(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    vecs = random_unitary(4, rng)[:, :3]
    cq = pure_cq(p, vecs)
    assert orthogonality_defect(cq) < 1e-12
    state = sqmci_example_isometry(cq)
    assert is_sqmc(state)
    rep = sqmci_halving_check(state)
    assert rep.i_se == pytest.approx(shannon_entropy(p), abs=1e-9)


def test_isometry_rejects_overlapping_conditionals():
    v = np.array([[1.0, 0.1], [0.0, math.sqrt(1 - 0.01)]])
    with pytest.raises(ValueError, match="not orthogonal"):
        sqmci_example_isometry(pure_cq([0.5, 0.5], v))


def test_copying_isometry_is_isometric(rng):
    vecs = random_unitary(3, rng)[:, :2]
    V = copying_isometry(vecs)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(3), atol=1e-12)


def test_apply_isometry_validation(rng):
    rho = random_density(4, rng)
    with pytest.raises(ValueError, match="shape"):
        apply_isometry(rho, (2, 2), np.eye(3), (2, 2))
    with pytest.raises(ValueError, match="isometry"):
        apply_isometry(rho, (2, 2), np.ones((4, 2)), (2, 2))
    with pytest.raises(ValueError):
        random_isometry(3, 2, rng)


@given(seeds)
def test_unitary_invariance_on_ef(seed):
    rng = np.random.default_rng(seed)
    state = TripartiteState.from_array(random_density(12, rng), (2, 3, 2))
    U = random_unitary(6, rng)
    W = np.kron(np.eye(2), U)
    moved = TripartiteState.from_array(W @ state.rho.entries @ W.conj().T, (2, 3, 2))
    assert abs(moved.mutual_information("S", "EF") - state.mutual_information("S", "EF")) < 1e-9


@given(seeds)
def test_chain_rule(seed):
    rng = np.random.default_rng(seed)
    state = TripartiteState.from_array(random_density(12, rng), (2, 3, 2))
    lhs = state.mutual_information("S", "EF")
    rhs = state.mutual_information("S", "E") + is_qmc(state, S_E_F)[1]
    assert abs(lhs - rhs) < 1e-9


def test_copying_isometry_beats_random_isometries(rng):
    p = rng.dirichlet(np.ones(3))
    vecs = random_unitary(3, rng)
    cq = pure_cq(p, vecs)
    best = squashed_information_sum(sqmci_example_isometry(cq))
    rho = cq.to_dense()
    for _ in range(50):
        V = random_isometry(3, 9, rng)
        alt = squashed_information_sum(apply_isometry(rho, (3, 3), V, (3, 3)))
        assert 0.5 * alt <= 0.5 * best + 1e-9
