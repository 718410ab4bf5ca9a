import math

import numpy as np
import pytest
from scipy.linalg import block_diag

from qkdrate_py import qmath
from qkdrate_py.errors import DomainError


def test_binary_entropy_endpoints_and_midpoint():
    assert qmath.binary_entropy(0.0) == 0.0
    assert qmath.binary_entropy(1.0) == 0.0
    assert math.isclose(qmath.binary_entropy(0.5), 1.0)
    assert math.isclose(qmath.binary_entropy(0.11), qmath.binary_entropy(0.89))


def test_binary_entropy_accepts_arrays():
    values = qmath.binary_entropy(np.array([0.0, 0.5, 1.0]))
    assert np.allclose(values, [0.0, 1.0, 0.0])


def test_binary_entropy_rejects_out_of_range():
    with pytest.raises(DomainError):
        qmath.binary_entropy(1.2)


def test_shannon_entropy_uniform_and_degenerate():
    assert math.isclose(qmath.shannon_entropy([0.25] * 4), 2.0)
    assert qmath.shannon_entropy([1.0, 0.0, 0.0]) == 0.0
    with pytest.raises(DomainError):
        qmath.shannon_entropy([0.5, 0.6])


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    m = a + a.conj().T
    lapack, _ = qmath.eig_hermitian(m)
    jacobi, vectors = qmath.eig_hermitian(m, method="jacobi")
    assert np.allclose(lapack, jacobi, atol=1e-9)
    # descending order, and the eigenvectors reconstruct the matrix
    assert np.all(np.diff(jacobi) <= 1e-12)
    assert np.allclose(vectors @ np.diag(jacobi) @ vectors.conj().T, m, atol=1e-8)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(DomainError):
        qmath.eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_von_neumann_entropy_of_mixed_and_pure_states():
    assert math.isclose(qmath.von_neumann_entropy(np.eye(4) / 4), 2.0)
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    assert abs(qmath.von_neumann_entropy(qmath.projector(plus))) < 1e-12


def test_partial_trace_of_product_state():
    rho_a = np.diag([0.7, 0.3])
    rho_b = np.array([[0.5, 0.5], [0.5, 0.5]])
    joint = np.kron(rho_a, rho_b)
    assert np.allclose(qmath.partial_trace(joint, (2, 2), keep=0), rho_a)
    assert np.allclose(qmath.partial_trace(joint, (2, 2), keep=1), rho_b)


def _random_density(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def test_von_neumann_entropy_is_unitarily_invariant():
    rng = np.random.default_rng(8)
    rho = _random_density(rng, 4)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    rotated = q @ rho @ q.conj().T
    assert math.isclose(qmath.von_neumann_entropy(rotated), qmath.von_neumann_entropy(rho), abs_tol=1e-9)


def test_entropy_of_block_diagonal_state_splits_into_weights_and_blocks():
    rng = np.random.default_rng(12)
    first, second = _random_density(rng, 3), _random_density(rng, 2)
    p = 0.3
    rho = block_diag(p * first, (1 - p) * second)
    expected = (
        qmath.binary_entropy(p)
        + p * qmath.von_neumann_entropy(first)
        + (1 - p) * qmath.von_neumann_entropy(second)
    )
    assert math.isclose(qmath.von_neumann_entropy(rho), expected, abs_tol=1e-9)


def test_partial_trace_of_maximally_entangled_state():
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
    rho = qmath.projector(bell)
    assert np.allclose(qmath.partial_trace(rho, (2, 2), keep=0), np.eye(2) / 2)
    assert np.allclose(qmath.partial_trace(rho, (2, 2), keep=1), np.eye(2) / 2)


def test_conditional_entropy_of_classical_state_with_trivial_environment():
    # A uniform and E empty -> S(A|E) = 1
    rho = np.kron(np.eye(2) / 2, np.array([[1.0]]))
    assert math.isclose(qmath.exact_conditional_entropy(rho, (2, 1)), 1.0)


def test_conditional_entropy_of_bell_state_is_negative():
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
    assert math.isclose(qmath.exact_conditional_entropy(qmath.projector(bell), (2, 2)), -1.0, abs_tol=1e-9)


def test_check_density_rejects_bad_trace():
    with pytest.raises(DomainError):
        qmath.check_density(np.eye(2))
