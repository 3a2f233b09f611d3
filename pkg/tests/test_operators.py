import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbounds.operators import (NegativityError, OperatorError, check_state, dagger, eig_hermitian,
                               frac_power_on_support, jordan_product, real_trace_form,
                               solve_symmetric_lyapunov, support_projector)
from qbounds.validate import random_density, random_hermitian

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_eig_pauli_x():
    lam, vec = eig_hermitian(X)
    assert lam == pytest.approx([-1.0, 1.0])
    assert np.allclose(dagger(vec) @ vec, np.eye(2))


def test_eig_identity():
    lam, _ = eig_hermitian(np.eye(3))
    assert lam == pytest.approx([1.0, 1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_eig_reconstructs(seed, d):
    a = random_hermitian(np.random.default_rng(seed), d)
    dec = eig_hermitian(a)
    assert np.max(np.abs(dec.reconstruct() - a)) < 1e-9 * max(1.0, np.abs(a).max())
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    assert dec.eigenvalues.sum() == pytest.approx(np.trace(a).real, abs=1e-9)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[0, 1], [0, 0]])])
def test_eig_rejects_invalid(bad):
    with pytest.raises(OperatorError):
        eig_hermitian(bad)


def test_frac_power_examples():
    assert np.allclose(frac_power_on_support(np.diag([1.0, 0.0]), 0.5), np.diag([1.0, 0.0]))
    assert np.allclose(frac_power_on_support(np.diag([0.3, 0.7, 0.0]), 0.0), np.diag([1, 1, 0]))
    assert np.allclose(frac_power_on_support(np.diag([0.25, 0.75]), -1.0), np.diag([4.0, 4 / 3]))


def test_frac_power_rejects_negative_state():
    with pytest.raises(NegativityError):
        frac_power_on_support(np.diag([1.0, -0.1]), 0.5)


def test_tiny_negative_eigenvalues_are_clamped():
    out = frac_power_on_support(np.diag([1.0, -1e-12]), 0.5)
    assert np.allclose(out, np.diag([1.0, 0.0]))


def test_batched_power_matches_loop(rng):
    stack = np.stack([random_density(rng, 3, 2) * w for w in (1e-7, 0.3, 1.0)])
    batched = frac_power_on_support(stack, 0.37)
    for k in range(3):
        assert np.allclose(batched[k], frac_power_on_support(stack[k], 0.37))


@settings(max_examples=40, deadline=None)
@given(seeds, dims, st.floats(0.05, 1.5), st.floats(0.05, 1.5))
def test_powers_add_on_support(seed, d, s, t):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d, rank=int(rng.integers(1, d + 1)))
    lhs = frac_power_on_support(rho, s) @ frac_power_on_support(rho, t)
    assert np.max(np.abs(lhs - frac_power_on_support(rho, s + t))) < 1e-8


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_support_projector_idempotent(seed, d):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, d + 1))
    rho = random_density(rng, d, rank)
    P = support_projector(rho)
    assert np.max(np.abs(P @ P - P)) < 1e-9
    assert np.max(np.abs(P @ rho - rho)) < 1e-9
    assert np.trace(P).real == pytest.approx(rank, abs=1e-8)


def test_jordan_examples():
    a = np.array([[1, 2j], [-2j, 3]])
    assert np.allclose(jordan_product(a, np.eye(2)), a)
    assert np.allclose(jordan_product(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 8]))
    up = np.array([[0, 1], [0, 0]])
    assert np.allclose(jordan_product(up, up.T), np.eye(2) / 2)


def test_jordan_dimension_mismatch():
    with pytest.raises(OperatorError):
        jordan_product(np.eye(2), np.eye(3))


@settings(max_examples=30, deadline=None)
@given(seeds, dims, st.floats(-3, 3), st.floats(-3, 3))
def test_jordan_symmetric_and_bilinear(seed, d, alpha, beta):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, d) for _ in range(3))
    assert np.allclose(jordan_product(a, b), jordan_product(b, a))
    lhs = jordan_product(alpha * a + beta * c, b)
    assert np.allclose(lhs, alpha * jordan_product(a, b) + beta * jordan_product(c, b))


def test_real_trace_form_examples():
    rho = np.diag([0.5, 0.5])
    assert real_trace_form(np.eye(2), np.eye(2), rho) == pytest.approx(1.0)
    assert real_trace_form(np.eye(2), 1j * np.eye(2), rho) == pytest.approx(0.0)


def test_real_trace_form_against_loops(rng):
    d = 4
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = random_density(rng, d)
    ref = sum(np.conj(a[j, i]) * b[j, k] * rho[k, i] for i in range(d) for j in range(d) for k in range(d))
    assert real_trace_form(a, b, rho) == pytest.approx(ref.real, rel=1e-12)


def test_lyapunov_rho_gives_support_projector(rng):
    rho = random_density(rng, 4, rank=2)
    L, res = solve_symmetric_lyapunov(rho, rho)
    assert np.allclose(L, support_projector(rho), atol=1e-9)
    assert res < 1e-12


def test_lyapunov_off_diagonal_example():
    d = 0.3 - 0.2j
    D = np.array([[0, d], [np.conj(d), 0]])
    L, res = solve_symmetric_lyapunov(np.diag([1.0, 0.0]), D)
    assert np.allclose(L, [[0, 2 * d], [2 * np.conj(d), 0]])
    assert res < 1e-14


def test_lyapunov_kernel_block_leaves_residual():
    _, res = solve_symmetric_lyapunov(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert res == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(seeds, dims)
def test_lyapunov_full_rank_solution(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d)
    D = random_hermitian(rng, d)
    L, res = solve_symmetric_lyapunov(rho, D)
    assert np.allclose(L, dagger(L), atol=1e-9)
    assert np.max(np.abs(0.5 * (L @ rho + rho @ L) - D)) < 1e-8 * max(1.0, np.abs(L).max())


def test_check_state():
    check_state(np.eye(2) / 2)
    with pytest.raises(OperatorError):
        check_state(np.eye(2))
    with pytest.raises(NegativityError):
        check_state(np.diag([1.2, -0.2]))
