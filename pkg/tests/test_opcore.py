import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_hermitian, random_matrix
from vanhove.opcore import (
    DimensionError,
    NumericError,
    apply,
    check_hermitian,
    commutator_superop,
    devectorize,
    embed_superop,
    left_mult,
    mat_exp,
    partial_trace_R,
    propagator,
    ptrace_superop,
    right_mult,
    sandwich,
    superop_norm_estimate,
    trace_norm,
    vectorize,
)

seeds = st.integers(0, 2**32 - 1)


def test_column_stacking_convention():
    a = np.array([[1, 2], [3, 4]])
    assert vectorize(a).tolist() == [1, 3, 2, 4]
    assert not vectorize(np.zeros((3, 3))).any()


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 8), seed=seeds)
def test_vectorize_round_trip(d, seed):
    a = random_matrix(np.random.default_rng(seed), d)
    assert np.array_equal(devectorize(vectorize(a)), a)


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DimensionError):
        devectorize(np.zeros(5))
    with pytest.raises(DimensionError):
        vectorize(np.zeros((2, 3)))


def test_mat_exp_examples(rng):
    assert np.allclose(mat_exp(np.zeros((3, 3))), np.eye(3))
    u = mat_exp(-1j * np.diag([0.0, 1.0]), math.pi)
    assert np.allclose(u, np.diag([1.0, -1.0]), atol=1e-14)
    a = random_matrix(rng, 4)
    err = np.abs(mat_exp(a, 0.6) - mat_exp(a, 0.3) @ mat_exp(a, 0.3)).max()
    assert err <= 1e-10


def test_mat_exp_hermitian_path_agrees(rng):
    h = random_hermitian(rng, 5)
    assert np.abs(mat_exp(h, -0.7j, hermitian=True) - mat_exp(-0.7j * h)).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 6), seed=seeds)
def test_anti_hermitian_exponential_is_unitary(d, seed):
    h = random_hermitian(np.random.default_rng(seed), d)
    u = mat_exp(1j * h)
    assert np.abs(u.conj().T @ u - np.eye(d)).max() <= 1e-10


def test_mat_exp_rejects_nonfinite():
    with pytest.raises(NumericError):
        mat_exp(np.array([[np.nan]]))


def test_partial_trace_examples(rng):
    sigma = random_matrix(rng, 2)
    omega = random_density(rng, 3)
    assert np.allclose(partial_trace_R(np.kron(sigma, omega), 2, 3), sigma)
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(partial_trace_R(np.outer(bell, bell), 2, 2), np.eye(2) / 2)
    rho = random_density(rng, 6)
    assert abs(np.trace(partial_trace_R(rho, 2, 3)) - np.trace(rho)) <= 1e-12
    with pytest.raises(DimensionError):
        partial_trace_R(rho, 4, 2)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_partial_trace_invariant_under_bath_unitaries(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 6)
    u = mat_exp(1j * random_hermitian(rng, 3))
    big = np.kron(np.eye(2), u)
    assert np.abs(partial_trace_R(big @ rho @ big.conj().T, 2, 3) - partial_trace_R(rho, 2, 3)).max() <= 1e-10


def test_superop_matrices_match_direct_products(rng):
    a, b, x = (random_matrix(rng, 3) for _ in range(3))
    assert np.abs(apply(left_mult(a), x) - a @ x).max() <= 1e-12
    assert np.abs(apply(right_mult(a), x) - x @ a).max() <= 1e-12
    assert np.abs(apply(sandwich(a, b), x) - a @ x @ b).max() <= 1e-12
    assert np.abs(apply(commutator_superop(a), x) - (a @ x - x @ a)).max() <= 1e-12
    with pytest.raises(DimensionError):
        apply(np.eye(4), np.eye(3))


def test_commutator_examples():
    assert not commutator_superop(np.eye(3)).any()
    x = np.array([[0, 1], [0, 0]])
    assert np.array_equal(apply(commutator_superop(np.diag([0, 1])), x), -x)


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 5), seed=seeds)
def test_commutator_annihilates_identity_and_trace(d, seed):
    rng = np.random.default_rng(seed)
    s = commutator_superop(random_hermitian(rng, d))
    assert np.abs(apply(s, np.eye(d))).max() <= 1e-12
    assert abs(np.trace(apply(s, random_matrix(rng, d)))) <= 1e-12 * max(1.0, d)


def test_ptrace_and_embed_superops(rng):
    omega = random_density(rng, 3)
    t = ptrace_superop(2, 3)
    e = embed_superop(2, omega)
    rho = random_density(rng, 6)
    assert np.allclose(devectorize(t @ vectorize(rho)), partial_trace_R(rho, 2, 3))
    assert np.allclose(t @ e, np.eye(4))


def test_norm_estimate_examples():
    assert superop_norm_estimate(np.eye(4)) == pytest.approx(1.0)
    assert superop_norm_estimate(np.zeros((9, 9))) == 0.0
    assert superop_norm_estimate(commutator_superop(np.diag([1.0, -1.0]))) >= 2.0 - 1e-12


def test_norm_estimate_is_a_lower_bound(rng):
    # for X -> A X B the induced trace norm is ||A|| ||B|| (operator norms)
    a, b = random_matrix(rng, 3), random_matrix(rng, 3)
    exact = np.linalg.norm(a, 2) * np.linalg.norm(b, 2)
    est = superop_norm_estimate(sandwich(a, b), n_probe=200)
    assert est <= exact * (1 + 1e-12)
    assert est >= 0.5 * exact


def test_norm_estimate_seeded():
    s = np.random.default_rng(0).normal(size=(9, 9))
    assert superop_norm_estimate(s, seed=3) == superop_norm_estimate(s, seed=3)


def test_trace_norm_and_hermitian_check(rng):
    rho = random_density(rng, 4)
    assert trace_norm(rho) == pytest.approx(1.0)
    assert check_hermitian(rho) <= 1e-12
    with pytest.raises(ValueError):
        check_hermitian(random_matrix(rng, 3))


def test_propagator_is_exp_minus_ith(rng):
    h = random_hermitian(rng, 3)
    assert np.allclose(propagator(h, 0.4), mat_exp(-0.4j * h))
