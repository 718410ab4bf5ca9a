import math

import numpy as np
import pytest

from qkdrate_py.attack import random_attack, random_two_way_attack
from qkdrate_py.bound import (
    PairTerm,
    best_pairing,
    best_pairing_values,
    bound_values,
    conditional_shannon,
    oracle_gap,
    theorem1_bound,
)
from qkdrate_py.errors import DomainError
from qkdrate_py.protocols import OptPiParams, b92_pairs, optpi_pairs, sqkd_pairs


def test_orthogonal_and_identical_pairs():
    # orthogonal ancillas reveal the bit; identical ones hide it
    assert math.isclose(theorem1_bound([PairTerm(0.5, 0.5, 0.0)]).s_lower, 0.0, abs_tol=1e-12)
    assert math.isclose(theorem1_bound([PairTerm(0.5, 0.5, 0.5)]).s_lower, 1.0, abs_tol=1e-9)


def test_worked_example_terms():
    result = theorem1_bound([PairTerm(0.835, 0.816, 0.713), PairTerm(0.132, 0.024, 0.03)])
    assert math.isclose(result.per_term[0].lam, 0.932, abs_tol=2e-3)
    assert math.isclose(result.per_term[1].lam, 0.895, abs_tol=2e-3)
    assert math.isclose(result.s_lower, 0.598, abs_tol=3e-3)


def test_cauchy_schwarz_is_enforced():
    with pytest.raises(DomainError):
        PairTerm(0.1, 0.1, 0.2)


def test_missing_partner_contributes_nothing():
    result = theorem1_bound([PairTerm(0.5, 0.5, 0.5), PairTerm(0.2, 0.0, 0.0)])
    assert math.isclose(result.s_lower, 1.0 / 1.2, abs_tol=1e-9)


def test_vectorized_bound_matches_scalar():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n0 = rng.uniform(0.01, 1.0, size=3)
        n1 = rng.uniform(0.01, 1.0, size=3)
        overlaps = rng.uniform(-1.0, 1.0, size=3) * np.sqrt(n0 * n1)
        values, feasible = bound_values(n0, n1, overlaps)
        expected = theorem1_bound([PairTerm(*t) for t in zip(n0, n1, overlaps)]).s_lower
        assert bool(feasible)
        assert math.isclose(float(values), expected, abs_tol=1e-12)


def test_vectorized_bound_flags_infeasible_overlaps():
    _, feasible = bound_values([0.1, 0.5], [0.1, 0.5], [[0.0, 0.2], [0.3, 0.0]])
    assert feasible.tolist() == [True, False]


def test_best_pairing_is_at_least_the_fixed_pairing():
    norms0 = [0.4, 0.1]
    norms1 = [0.1, 0.4]
    overlaps = np.array([[0.01, 0.39], [0.09, 0.01]])
    fixed = theorem1_bound([PairTerm(0.4, 0.1, 0.01), PairTerm(0.1, 0.4, 0.01)]).s_lower
    best, perm = best_pairing(norms0, norms1, overlaps)
    assert perm == (1, 0)
    assert best.s_lower > fixed


def test_vectorized_best_pairing_keeps_index_feasibility():
    n0 = np.array([0.4, 0.1])
    n1 = np.array([0.1, 0.4])
    # the swapped pairing is physical, the index pairing is not
    unphysical = np.array([[0.3, 0.39], [0.09, 0.01]])
    _, feasible = best_pairing_values(n0, n1, unphysical)
    assert not bool(feasible)

    physical = np.array([[0.01, 0.39], [0.09, 0.01]])
    values, feasible = best_pairing_values(n0, n1, physical)
    fixed, _ = bound_values(n0, n1, np.diagonal(physical))
    expected, _ = best_pairing(n0, n1, physical)
    assert bool(feasible)
    assert float(values) >= float(fixed)
    assert math.isclose(float(values), expected.s_lower, abs_tol=1e-12)


def test_conditional_shannon():
    assert math.isclose(conditional_shannon([0.25] * 4), 1.0)
    assert math.isclose(conditional_shannon([0.5, 0.0, 0.0, 0.5]), 0.0, abs_tol=1e-12)
    Q = 0.1
    joint = [0.5 * (1 - Q), 0.5 * Q, 0.5 * Q, 0.5 * (1 - Q)]
    h = -Q * math.log2(Q) - (1 - Q) * math.log2(1 - Q)
    assert math.isclose(conditional_shannon(joint), h)


def test_single_real_pair_is_tight():
    pairs = [(np.array([0.6, 0.2]), np.array([0.3, -0.5]))]
    gap = oracle_gap(pairs)
    assert math.isclose(gap.exact, gap.bound, abs_tol=1e-9)


@pytest.mark.parametrize("seed", range(50))
def test_bound_never_exceeds_exact_entropy_one_way(seed):
    attack = random_attack(seed)
    for alpha_key in (0.0, 0.342):
        assert oracle_gap(b92_pairs(attack, alpha_key)).gap >= -1e-8


@pytest.mark.parametrize("seed", range(20))
def test_bound_never_exceeds_exact_entropy_two_way(seed):
    assert oracle_gap(sqkd_pairs(random_two_way_attack(seed))).gap >= -1e-8


@pytest.mark.parametrize("seed", range(10))
def test_bound_never_exceeds_exact_entropy_rotated_encoding(seed):
    params = OptPiParams(0.8, -0.6, 1 / math.sqrt(2), -1 / math.sqrt(2))
    assert oracle_gap(optpi_pairs(random_attack(seed), params)).gap >= -1e-8
