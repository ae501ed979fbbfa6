import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aircons.channel import FadingConfig, sample_pair_channel
from aircons.consensus import ConsensusGroup, distances_from_alphas
from aircons.deviation import (
    deviation_lower_bound,
    equal_spacing_alphas,
    expected_abs_inphase,
    expected_mixing_matrix,
    left_perron_vector,
    mc_deviation,
)
from aircons.errors import ConvergenceError, DomainError


def dense_left_perron(B):
    """Oracle: eigenvector of B^T for the eigenvalue closest to 1, normalized to sum 1."""
    w, V = np.linalg.eig(B.T)
    v = np.real(V[:, np.argmin(np.abs(w - 1))])
    return v / v.sum()


def random_stochastic(rng, S):
    B = rng.uniform(0.01, 1.0, (S, S))
    return B / B.sum(axis=1, keepdims=True)


@given(seed=st.integers(0, 2 ** 32 - 1), S=st.integers(2, 10))
def test_power_iteration_matches_dense_solver(seed, S):
    B = random_stochastic(np.random.default_rng(seed), S)
    v = left_perron_vector(B)
    assert np.allclose(v, dense_left_perron(B), atol=1e-10)
    assert np.allclose(v @ B, v, atol=1e-11)
    assert v.sum() == pytest.approx(1.0)


def test_power_iteration_gives_up():
    B = np.array([[0.9, 0.1], [0.5, 0.5]])
    with pytest.raises(ConvergenceError):
        left_perron_vector(B, max_steps=2)


def test_expected_abs_inphase_matches_sampling(rng):
    d = 7.0
    h = sample_pair_channel(d, FadingConfig(), rng, size=300_000)
    assert np.mean(np.abs(h.real)) == pytest.approx(expected_abs_inphase(d, 4.0), rel=0.01)


@given(st.lists(st.floats(1.0, 20.0), min_size=1, max_size=8), st.floats(0.05, 0.95))
def test_expected_matrix_is_row_stochastic(gaps, rho):
    alphas = np.cumsum([5.0] + gaps)
    rep = expected_mixing_matrix(distances_from_alphas(alphas), rho)
    B = rep.expected_matrix
    assert np.allclose(B.sum(axis=1), 1.0)
    assert np.allclose(np.diag(B), 1 - rho)
    assert np.all(rep.left_eigvec > 0)


@pytest.mark.parametrize("S", [2, 3, 5, 10])
def test_equal_spacing_bound_is_zero(S):
    alphas = equal_spacing_alphas(S, 5.0)
    rep = expected_mixing_matrix(distances_from_alphas(alphas), 0.9)
    assert np.allclose(rep.left_eigvec, rep.left_eigvec[::-1], atol=1e-12)
    assert rep.left_eigvec @ alphas == pytest.approx((S + 1) * 5.0 / 2, abs=1e-9)
    assert abs(deviation_lower_bound(rep, alphas)) < 1e-9


def test_uneven_spacing_pulls_toward_the_tight_cluster():
    alphas = np.array([5.0, 6.0, 7.0, 30.0])
    rep = expected_mixing_matrix(distances_from_alphas(alphas), 0.9)
    assert deviation_lower_bound(rep, alphas) < 0
    assert rep.lower_bound == deviation_lower_bound(rep, alphas, alphas.mean())


def test_expected_matrix_validation():
    with pytest.raises(DomainError):
        expected_mixing_matrix(np.zeros((3, 3)), 0.9)
    with pytest.raises(DomainError):
        expected_mixing_matrix(distances_from_alphas([1.0, 2.0]), 1.0)


def test_mc_deviation_is_seeded_and_validated():
    alphas = equal_spacing_alphas(3, 5.0)
    g = ConsensusGroup(owner=2, members=(1, 2, 3), rounds=20)
    a = mc_deviation(g, alphas, 300, np.random.default_rng(5))
    b = mc_deviation(g, alphas, 300, np.random.default_rng(5))
    assert a == b
    assert a[1] > 0
    with pytest.raises(DomainError):
        mc_deviation(g, alphas, 99, np.random.default_rng(5))
    with pytest.raises(DomainError):
        mc_deviation(g, alphas[:2], 100, np.random.default_rng(5))
    with pytest.raises(DomainError):
        mc_deviation(g, np.array([5.0, 10.0, 60.0]), 100, np.random.default_rng(5))
