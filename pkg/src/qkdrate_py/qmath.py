"""Small-dimension complex linear algebra and entropy functions.

All logarithms are base two. Matrices are plain ``numpy`` arrays; every
function here is pure and safe to call from several threads.
"""
from __future__ import annotations

from typing import Sequence, Tuple, Union
import logging

import numpy as np

from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
ProbVector = Union[Sequence[float], np.ndarray]

MAX_DIMENSION = 64
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PROB_SLACK = 1e-12
NORMALIZATION_TOL = 1e-9
EIGEN_CLAMP = 1e-9
RECONSTRUCTION_TOL = 1e-8

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


def binary_entropy(x):
    """h(x) = -x log x - (1-x) log (1-x); accepts a float or an array."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -PROB_SLACK) or np.any(arr > 1 + PROB_SLACK):
        raise DomainError(f"binary entropy argument outside [0, 1]: {x}")
    arr = np.clip(arr, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(arr > 0, -arr * np.log2(arr), 0.0)
        second = np.where(arr < 1, -(1 - arr) * np.log2(1 - arr), 0.0)
    result = first + second
    if result.ndim == 0:
        return float(result)
    return result


def _as_probabilities(p: ProbVector, normalized: bool) -> np.ndarray:
    arr = np.asarray(p, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("empty probability vector")
    if np.any(arr < -PROB_SLACK) or np.any(arr > 1 + PROB_SLACK):
        raise DomainError(f"probabilities outside [0, 1]: {arr.tolist()}")
    if normalized and abs(arr.sum() - 1.0) > NORMALIZATION_TOL:
        raise DomainError(f"probabilities sum to {arr.sum():.12g}, expected 1")
    return np.clip(arr, 0.0, 1.0)


def shannon_entropy(p: ProbVector, normalized: bool = True) -> float:
    """H(p) = -sum p_i log p_i with 0 log 0 = 0."""
    arr = _as_probabilities(p, normalized)
    nonzero = arr[arr > 0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def is_hermitian(m: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def _check_square(m: ComplexMatrix) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] > MAX_DIMENSION:
        raise DomainError(f"dimension {arr.shape[0]} exceeds {MAX_DIMENSION}")
    return arr


def check_density(rho: ComplexMatrix) -> np.ndarray:
    """Validate Hermiticity and unit trace; returns the matrix as complex array."""
    arr = _check_square(rho)
    if not is_hermitian(arr):
        raise DomainError("density matrix is not Hermitian")
    trace = np.trace(arr)
    if abs(trace - 1.0) > TRACE_TOL:
        raise DomainError(f"density matrix trace is {trace.real:.12g}, expected 1")
    return arr


def jacobi_eigh(m: ComplexMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations for a Hermitian matrix.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns. Independent of LAPACK, which makes it a useful cross-check.
    """
    a = _check_square(m).copy()
    if not is_hermitian(a):
        raise DomainError("Jacobi solver requires a Hermitian matrix")
    n = a.shape[0]
    vectors = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a)))
        if np.max(off, initial=0.0) <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                magnitude = abs(apq)
                if magnitude <= JACOBI_TOL * scale * 1e-3:
                    continue
                phase = apq / magnitude
                theta = 0.5 * np.arctan2(2 * magnitude, (a[q, q] - a[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                # phase fix followed by a real Givens rotation
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                vectors[:, cols] = vectors[:, cols] @ rot
    else:
        raise ConvergenceError(f"Jacobi eigen-solver did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    values = np.real(np.diag(a))
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def eig_hermitian(m: ComplexMatrix, method: str = "lapack") -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    ``method`` is ``"lapack"`` (numpy) or ``"jacobi"``. The reconstruction
    residual max|M - V diag(w) V^H| is checked against 1e-8.
    """
    arr = _check_square(m)
    if not is_hermitian(arr):
        raise DomainError("matrix is not Hermitian")
    if method == "jacobi":
        values, vectors = jacobi_eigh(arr)
    elif method == "lapack":
        try:
            values, vectors = np.linalg.eigh(arr)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigh failed: {exc}") from exc
        values = values[::-1]
        vectors = vectors[:, ::-1]
    else:
        raise DomainError(f"unknown eigen-solver '{method}'")

    residual = np.max(np.abs(arr - (vectors * values) @ vectors.conj().T), initial=0.0)
    if residual > RECONSTRUCTION_TOL * max(1.0, float(np.max(np.abs(arr), initial=0.0))):
        raise ConvergenceError(f"eigen-decomposition residual {residual:.3g} too large")
    return np.asarray(values, dtype=float), vectors


def spectrum(rho: ComplexMatrix) -> np.ndarray:
    """Eigenvalues of a density matrix with round-off negatives clamped to zero."""
    values, _ = eig_hermitian(rho)
    if values.size and values[-1] < -EIGEN_CLAMP:
        raise DomainError(f"density matrix has eigenvalue {values[-1]:.3g} < 0")
    if values.size and values[-1] < 0:
        logger.debug("[Entropy] Clamping eigenvalue %.3g to 0", values[-1])
    return np.clip(values, 0.0, None)


def von_neumann_entropy(rho: ComplexMatrix) -> float:
    rho = check_density(rho)
    values = spectrum(rho)
    nonzero = values[values > 0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def partial_trace(rho: ComplexMatrix, dims: Sequence[int], keep: Union[int, Sequence[int]]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order, e.g. ``(dA, dB)``;
    ``keep`` is an index or a sequence of indices into ``dims``.
    """
    arr = np.asarray(rho, dtype=complex)
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    if arr.ndim != 2 or arr.shape != (total, total):
        raise DomainError(f"matrix shape {arr.shape} does not match subsystem dims {dims}")
    keep_idx = sorted({keep} if isinstance(keep, int) else set(keep))
    if not keep_idx or any(k < 0 or k >= len(dims) for k in keep_idx):
        raise DomainError(f"invalid subsystems to keep: {keep}")

    n = len(dims)
    tensor = arr.reshape(dims + dims)
    # einsum labels: row indices 0..n-1, column indices n..2n-1; traced ones share a label
    row_labels = list(range(n))
    col_labels = [k if k not in keep_idx else n + k for k in range(n)]
    out_labels = keep_idx + [n + k for k in keep_idx]
    reduced = np.einsum(tensor, row_labels + col_labels, out_labels)
    kept_dim = int(np.prod([dims[k] for k in keep_idx]))
    return reduced.reshape(kept_dim, kept_dim)


def exact_conditional_entropy(rho: ComplexMatrix, dims: Tuple[int, int]) -> float:
    """S(A|E) = S(rho_AE) - S(rho_E) for a bipartite state with dims (dA, dE)."""
    rho = check_density(rho)
    rho_e = partial_trace(rho, dims, keep=1)
    return von_neumann_entropy(rho) - von_neumann_entropy(rho_e)


def projector(vector: np.ndarray) -> np.ndarray:
    """|v><v| for an (unnormalized) vector."""
    v = np.asarray(vector, dtype=complex).ravel()
    return np.outer(v, v.conj())
