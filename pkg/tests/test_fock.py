import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import poisson

from dephcap.fock import (
    FockVector,
    GramMatrix,
    ProbabilityDistribution,
    as_probabilities,
    coherent_amplitudes,
    coherent_overlap,
    coherent_vector,
    dephasing_amplitudes,
    dephasing_gram,
    env_dim,
    gram_matrix,
    poisson_tail,
)

amplitude = st.complex_numbers(max_magnitude=4.0, allow_nan=False, allow_infinity=False)


def test_fock_vector_norm_bookkeeping():
    v = FockVector([0.6, 0.8j])
    assert v.dim == 2 and v.norm_deficit == 0.0
    w = FockVector.from_amplitudes([0.6, 0.0])
    assert w.norm_deficit == pytest.approx(0.64)


def test_fock_vector_rejects_bad_norm():
    with pytest.raises(ValueError):
        FockVector([1.0, 1.0])
    with pytest.raises(ValueError):
        FockVector([1.0], norm_deficit=-0.1)
    with pytest.raises(ValueError):
        FockVector([])


def test_fock_vector_is_immutable():
    v = FockVector([1.0, 0.0])
    with pytest.raises(ValueError):
        v.amplitudes[0] = 0.5


@given(amplitude)
def test_coherent_populations_are_poisson(alpha):
    amps = coherent_amplitudes(alpha, 60)
    pmf = poisson.pmf(np.arange(60), abs(alpha) ** 2)
    np.testing.assert_allclose(np.abs(amps) ** 2, pmf, atol=1e-14)


@given(amplitude)
def test_truncated_coherent_vector_accounts_for_tail(alpha):
    v = coherent_vector(alpha, 8)
    assert np.vdot(v.amplitudes, v.amplitudes).real + v.norm_deficit == pytest.approx(1.0, abs=1e-12)


@given(amplitude, amplitude)
def test_overlap_matches_truncated_inner_product(a, b):
    de = 120
    num = np.vdot(coherent_amplitudes(a, de), coherent_amplitudes(b, de))
    assert abs(coherent_overlap(a, b) - num) < 1e-12


def test_overlap_of_distant_states_underflows_cleanly():
    assert abs(coherent_overlap(0, 40j)) < 1e-300


def test_gram_matrix_validation():
    with pytest.raises(ValueError):
        GramMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        GramMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ValueError):
        GramMatrix(np.array([[2.0, 0.0], [0.0, 1.0]]))


@given(st.lists(amplitude, min_size=1, max_size=6))
def test_gram_matrix_is_hermitian_psd_unit_diagonal(amps):
    G = gram_matrix(amps)
    assert G.min_eigenvalue >= -1e-10
    np.testing.assert_allclose(np.diag(G.entries), 1.0)
    np.testing.assert_allclose(G.entries, G.entries.conj().T)


@given(st.floats(0, 12), st.integers(1, 10))
def test_dephasing_gram_matches_generic_gram(gamma, d):
    np.testing.assert_allclose(dephasing_gram(gamma, d), gram_matrix(dephasing_amplitudes(gamma, d)).entries, atol=1e-14)


def test_negative_gamma_rejected():
    with pytest.raises(ValueError):
        dephasing_gram(-0.1, 3)
    with pytest.raises(ValueError):
        dephasing_amplitudes(-0.1, 3)


@pytest.mark.parametrize("gamma,d", [(0.5, 5), (3.0, 10), (12.0, 10), (30.0, 12)])
def test_env_dim_keeps_tail_negligible(gamma, d):
    mean = gamma * (d - 1) ** 2
    assert poisson_tail(mean, env_dim(gamma, d)) < 1e-12


def test_poisson_tail_edges():
    assert poisson_tail(3.0, 0) == 1.0
    assert poisson_tail(0.0, 5) == 0.0
    assert poisson_tail(2.0, 3) == pytest.approx(1 - poisson.cdf(2, 2.0))


def test_probability_distribution():
    p = ProbabilityDistribution.normalized([1, 1, 2])
    assert p.energy == pytest.approx(0.25 + 1.0)
    assert len(p) == 3
    np.testing.assert_allclose(ProbabilityDistribution.uniform(4).p, 0.25)
    for bad in ([0.5, 0.6], [-0.1, 1.1], [math.nan, 1.0], []):
        with pytest.raises(ValueError):
            ProbabilityDistribution(bad)
    assert as_probabilities(p) is p.p
