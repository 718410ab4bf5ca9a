"""Conditional-entropy lower bound for states built from pairs of ancilla vectors.

For rho_AE = (1/N) sum_i (|0><0| ⊗ |g_i^0><g_i^0| + |1><1| ⊗ |g_i^1><g_i^1|):

    S(A|E) >= sum_i (N_i^0 + N_i^1)/N * (h(N_i^0/(N_i^0+N_i^1)) - h(lambda_i))
    lambda_i = 1/2 + sqrt((N_i^0 - N_i^1)^2 + 4 Re^2<g_i^0|g_i^1>) / (2 (N_i^0 + N_i^1))
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import List, Sequence, Tuple
import logging
import math

import numpy as np

from .errors import DomainError
from .qmath import binary_entropy, exact_conditional_entropy, shannon_entropy

logger = logging.getLogger(__name__)

CS_SLACK = 1e-9
LAMBDA_SLACK = 1e-9
ORACLE_TOL = 1e-8


@dataclass(frozen=True)
class PairTerm:
    n0: float
    n1: float
    re_overlap: float

    def __post_init__(self) -> None:
        if self.n0 < -CS_SLACK or self.n1 < -CS_SLACK:
            raise DomainError(f"negative norm in {self}")
        cap = math.sqrt(max(self.n0, 0.0) * max(self.n1, 0.0))
        if abs(self.re_overlap) > cap + CS_SLACK:
            raise DomainError(f"overlap {self.re_overlap:.6g} violates Cauchy-Schwarz bound {cap:.6g}")

    @property
    def total(self) -> float:
        return max(self.n0, 0.0) + max(self.n1, 0.0)


@dataclass(frozen=True)
class TermResult:
    weight: float
    lam: float
    s: float


@dataclass(frozen=True)
class BoundResult:
    s_lower: float
    per_term: Tuple[TermResult, ...]


def _lambda(n0: float, n1: float, overlap: float) -> float:
    total = n0 + n1
    lam = 0.5 + math.sqrt((n0 - n1) ** 2 + 4.0 * overlap * overlap) / (2.0 * total)
    if lam > 1.0 + LAMBDA_SLACK:
        raise DomainError(f"lambda = {lam:.12g} exceeds 1")
    return min(lam, 1.0)


def theorem1_bound(terms: Sequence[PairTerm]) -> BoundResult:
    """Lower bound on S(A|E) for the pair decomposition ``terms``."""
    total = sum(t.total for t in terms)
    if not terms or total <= 0.0:
        raise DomainError("bound needs at least one term with positive norm")
    results: List[TermResult] = []
    s_lower = 0.0
    for term in terms:
        n0, n1 = max(term.n0, 0.0), max(term.n1, 0.0)
        weight = (n0 + n1) / total
        if n0 > 0.0 and n1 > 0.0:
            lam = _lambda(n0, n1, term.re_overlap)
            s = binary_entropy(n0 / (n0 + n1)) - binary_entropy(lam)
        else:
            # a missing partner leaves the key bit fully known to E
            lam, s = 1.0, 0.0
        results.append(TermResult(weight=weight, lam=lam, s=s))
        s_lower += weight * s
    return BoundResult(s_lower=s_lower, per_term=tuple(results))


def bound_values(n0, n1, overlaps) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized bound over the last axis of broadcastable arrays.

    Returns ``(s_lower, feasible)`` where ``feasible`` is False wherever some
    overlap breaks Cauchy-Schwarz; such entries are evaluated with lambda
    clamped to 1.
    """
    n0, n1, overlaps = np.broadcast_arrays(
        np.clip(np.asarray(n0, dtype=float), 0.0, None),
        np.clip(np.asarray(n1, dtype=float), 0.0, None),
        np.asarray(overlaps, dtype=float),
    )
    totals = n0 + n1
    grand = totals.sum(axis=-1)
    active = (n0 > 0) & (n1 > 0)
    safe_total = np.where(totals > 0, totals, 1.0)
    lam = 0.5 + np.sqrt((n0 - n1) ** 2 + 4.0 * overlaps**2) / (2.0 * safe_total)
    feasible = np.all(~active | (lam <= 1.0 + LAMBDA_SLACK), axis=-1)
    lam = np.clip(lam, 0.5, 1.0)
    ratio = np.where(active, n0 / safe_total, 0.0)
    s = np.where(active, binary_entropy(ratio) - binary_entropy(lam), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_lower = np.where(grand > 0, np.sum(totals * s, axis=-1) / np.where(grand > 0, grand, 1.0), np.nan)
    return s_lower, feasible


def best_pairing(
    norms0: Sequence[float], norms1: Sequence[float], overlaps: np.ndarray
) -> Tuple[BoundResult, Tuple[int, ...]]:
    """Highest bound over every re-pairing of the |1>-branch vectors.

    ``overlaps[i, j]`` is Re<g_i^0|g_j^1>; the returned permutation maps
    term i to the |1>-branch vector it is paired with.
    """
    overlaps = np.asarray(overlaps, dtype=float)
    m = len(norms0)
    if len(norms1) != m or overlaps.shape != (m, m):
        raise DomainError("pairing needs matching norm lists and a square overlap matrix")
    best: Tuple[BoundResult, Tuple[int, ...]] | None = None
    for perm in permutations(range(m)):
        terms = [PairTerm(norms0[i], norms1[perm[i]], overlaps[i, perm[i]]) for i in range(m)]
        result = theorem1_bound(terms)
        if best is None or result.s_lower > best[0].s_lower:
            best = (result, perm)
    logger.debug("[Bound] Best pairing %s gives %.6g", best[1], best[0].s_lower)
    return best


def best_pairing_values(n0, n1, overlaps) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized ``best_pairing``: ``overlaps`` has shape (..., M, M).

    Feasibility is that of the index pairing, so the feasible set matches
    ``bound_values`` on the diagonal and the result never falls below it
    there. Other pairings only count where their own overlaps are physical.
    """
    n0 = np.asarray(n0, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    overlaps = np.asarray(overlaps, dtype=float)
    m = overlaps.shape[-1]
    rows = np.arange(m)
    best, index_feasible = bound_values(n0, n1, overlaps[..., rows, rows])
    for perm in permutations(range(m)):
        cols = np.asarray(perm)
        if np.array_equal(cols, rows):
            continue
        values, feasible = bound_values(n0, n1[..., cols], overlaps[..., rows, cols])
        best = np.maximum(best, np.where(feasible, values, -np.inf))
    return best, index_feasible


def conditional_shannon(joint, arity: Tuple[int, int] = (2, 2), given: int = 1) -> float:
    """H(X|Y) for a joint distribution over X × Y laid out row-major.

    ``given`` selects the conditioning party: 1 conditions on the second
    index, 0 on the first.
    """
    p = np.asarray(joint, dtype=float).ravel()
    if p.size != arity[0] * arity[1]:
        raise DomainError(f"joint of size {p.size} does not match arity {arity}")
    h_joint = shannon_entropy(p)
    marginal = p.reshape(arity).sum(axis=1 - given)
    return h_joint - shannon_entropy(marginal)


def state_from_pairs(pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Explicit rho_AE for a list of (g_i^0, g_i^1) vectors, with its (dA, dE) dims."""
    if not pairs:
        raise DomainError("no vector pairs given")
    d = np.asarray(pairs[0][0]).size
    blocks = [np.zeros((d, d), dtype=complex), np.zeros((d, d), dtype=complex)]
    for pair in pairs:
        for bit, vector in enumerate(pair):
            v = np.asarray(vector, dtype=complex).ravel()
            blocks[bit] += np.outer(v, v.conj())
    total = float(np.trace(blocks[0]).real + np.trace(blocks[1]).real)
    if total <= 0.0:
        raise DomainError("all vectors are zero")
    rho = np.kron(np.diag([1.0, 0.0]), blocks[0]) + np.kron(np.diag([0.0, 1.0]), blocks[1])
    return rho / total, (2, d)


def terms_from_pairs(pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> List[PairTerm]:
    terms = []
    for g0, g1 in pairs:
        g0 = np.asarray(g0, dtype=complex).ravel()
        g1 = np.asarray(g1, dtype=complex).ravel()
        terms.append(
            PairTerm(float(np.vdot(g0, g0).real), float(np.vdot(g1, g1).real), float(np.vdot(g0, g1).real))
        )
    return terms


@dataclass(frozen=True)
class OracleGap:
    exact: float
    bound: float

    @property
    def gap(self) -> float:
        return self.exact - self.bound


def oracle_gap(pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> OracleGap:
    """Compare the closed-form bound with S(A|E) from a full eigen-decomposition."""
    rho, dims = state_from_pairs(pairs)
    exact = exact_conditional_entropy(rho, dims)
    bound = theorem1_bound(terms_from_pairs(pairs)).s_lower
    if exact - bound < -ORACLE_TOL:
        logger.warning("[Bound] Exact entropy %.12g below bound %.12g", exact, bound)
    return OracleGap(exact=exact, bound=bound)
