import math

import numpy as np
import pytest

from qkdrate_py.attack import (
    BasisConfig,
    depolarizing_attack,
    drift_attack,
    random_attack,
    rotation_attack,
    simulate_stats,
)
from qkdrate_py.bound import state_from_pairs, terms_from_pairs, theorem1_bound
from qkdrate_py.config import SolverSettings
from qkdrate_py.errors import DomainError
from qkdrate_py.fileformat import bundled_stats
from qkdrate_py.protocols import (
    OptPiParams,
    b92_coefficients,
    b92_keyrate,
    b92_pairs,
    b92_rate_table,
    b92_symmetric,
    bb84_keyrate,
    optpi_coefficients,
    optpi_keyrate,
    optpi_optimize,
    pair_terms,
    sqkd_symmetric,
    threshold,
    threshold_table,
)
from qkdrate_py.qmath import partial_trace
from qkdrate_py.tomography import GramEstimates, estimate_one_way

SYMMETRIC_THRESHOLDS = [
    (3, 0.0, 0.110),
    (3, 0.342, 0.0941),
    (3, 0.643, 0.0619),
    (3, 0.939, 0.015),
    (3, 0.985, 0.0041),
    (4, 0.0, 0.126),
    (4, 0.342, 0.1106),
    (4, 0.643, 0.0737),
    (4, 0.939, 0.0162),
    (4, 0.985, 0.0042),
]

EXAMPLE_RATES = [
    (3, 0.0, 0.288),
    (3, 0.1, 0.293),
    (3, 0.2, 0.271),
    (3, 0.342, 0.194),
    (3, 0.643, 0.0),
    (4, 0.0, 0.292),
    (4, 0.1, 0.295),
    (4, 0.2, 0.275),
    (4, 0.342, 0.205),
    # the bound is negative here (about -.14); a rate of .012 needs alpha_key near .54
    (4, 0.643, 0.0),
]


def test_worked_example_terms_and_rate():
    gram = estimate_one_way(bundled_stats())
    zero, one = b92_coefficients(0.342)
    first, second = pair_terms(gram, zero, one)
    assert math.isclose(first.n0, 0.835, abs_tol=2e-3)
    assert math.isclose(first.n1, 0.816, abs_tol=2e-3)
    assert math.isclose(second.n0, 0.132, abs_tol=2e-3)
    assert math.isclose(second.n1, 0.024, abs_tol=2e-3)
    assert math.isclose(first.re_overlap, 0.713, abs_tol=2e-3)
    assert math.isclose(second.re_overlap, 0.03, abs_tol=2e-3)
    assert math.isclose(first.total + second.total, 1.807, abs_tol=3e-3)

    report = b92_keyrate(gram, 0.342, stats=bundled_stats())
    assert math.isclose(report.entropy_bound, 0.598, abs_tol=5e-3)
    assert math.isclose(report.rate, 0.205, abs_tol=5e-3)
    assert math.isclose(report.rate, report.entropy_bound - report.cond_shannon)


def test_worked_example_psi3_rate():
    report = b92_keyrate(estimate_one_way(bundled_stats().restricted(3)), 0.342)
    assert math.isclose(report.rate, 0.194, abs_tol=5e-3)
    assert "re_12" in report.minimizer


@pytest.mark.parametrize("psi, alpha_key, expected", EXAMPLE_RATES)
def test_example_channel_rates(psi, alpha_key, expected):
    gram = estimate_one_way(bundled_stats().restricted(psi))
    assert math.isclose(b92_keyrate(gram, alpha_key).distillable, expected, abs_tol=5e-3)


def test_example_channel_large_alpha_key_is_not_distillable():
    psi4 = b92_keyrate(estimate_one_way(bundled_stats()), 0.643)
    psi3 = b92_keyrate(estimate_one_way(bundled_stats().restricted(3)), 0.643)
    assert math.isclose(psi4.rate, -0.1425, abs_tol=5e-3)
    assert psi3.rate <= psi4.rate + 1e-7


def test_rate_table_covers_both_preparation_sets():
    reports = b92_rate_table(bundled_stats())
    assert [r.psi for r in reports] == [3] * 5 + [4] * 5


@pytest.mark.parametrize("psi, alpha_key, expected", SYMMETRIC_THRESHOLDS)
def test_symmetric_thresholds(psi, alpha_key, expected):
    q = threshold(lambda Q: b92_symmetric(Q, alpha_key, psi))
    assert math.isclose(q, expected, abs_tol=1e-3)


def test_threshold_table_rows():
    rows = threshold_table(4, alphas=(0.0, 0.643))
    assert [alpha for alpha, _ in rows] == [0.0, 0.643]
    assert math.isclose(rows[0][1], 0.126, abs_tol=1e-3)
    assert math.isclose(rows[1][1], 0.0737, abs_tol=1e-3)


@pytest.mark.parametrize("psi", [3, 4])
@pytest.mark.parametrize("alpha_key", [0.0, 0.342])
def test_symmetric_rate_decreases_with_noise(psi, alpha_key):
    rates = [b92_symmetric(Q, alpha_key, psi).rate for Q in np.linspace(0.0, 0.1, 11)]
    assert all(later <= earlier + 1e-7 for earlier, later in zip(rates, rates[1:]))


def test_noiseless_channel_gives_full_rate():
    report = bb84_keyrate(GramEstimates.symmetric(0.0, 4))
    assert math.isclose(report.rate, 1.0, abs_tol=1e-9)
    assert report.protocol == "bb84"


@pytest.mark.parametrize("Q, expected", [(0.07, 0.349), (0.126, 0.001)])
def test_bb84_symmetric_rates(Q, expected):
    assert math.isclose(bb84_keyrate(GramEstimates.symmetric(Q, 4)).rate, expected, abs_tol=5e-3)


@pytest.mark.parametrize("Q", [round(0.01 * k, 2) for k in range(1, 11)])
def test_psi4_dominates_psi3_symmetric(Q):
    for alpha_key in (0.0, 0.342):
        psi3 = b92_symmetric(Q, alpha_key, 3).rate
        psi4 = b92_symmetric(Q, alpha_key, 4).rate
        assert psi4 >= psi3 - 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_psi4_dominates_psi3_random(seed):
    stats = simulate_stats(random_attack(seed), BasisConfig(), psi=4)
    psi4 = b92_keyrate(estimate_one_way(stats), 0.342).rate
    psi3 = b92_keyrate(estimate_one_way(stats.restricted(3)), 0.342).rate
    assert psi4 >= psi3 - 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_estimated_bound_matches_explicit_vectors(seed):
    attack = random_attack(seed)
    gram = estimate_one_way(simulate_stats(attack, BasisConfig(), psi=4))
    explicit = theorem1_bound(terms_from_pairs(b92_pairs(attack, 0.342))).s_lower
    assert math.isclose(b92_keyrate(gram, 0.342).entropy_bound, explicit, abs_tol=1e-7)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("alpha_key", [0.0, 0.342])
def test_psi3_bound_never_exceeds_the_true_overlap_bound(seed, alpha_key):
    attack = random_attack(seed)
    gram = estimate_one_way(simulate_stats(attack, BasisConfig(), psi=3))
    explicit = theorem1_bound(terms_from_pairs(b92_pairs(attack, alpha_key))).s_lower
    assert b92_keyrate(gram, alpha_key).entropy_bound <= explicit + 1e-7


def _b92_state_with_bob(attack, alpha_key):
    # A's key bit, B's conclusive guess, E; key states |0> and |a>
    a = alpha_key
    ab = math.sqrt(1 - a * a)
    key_states = [(1.0, 0.0), (a, ab)]
    # outcome |abar> means A sent |0>, outcome |1> means A sent |a>
    guesses = [((ab, -a), 0), ((0.0, 1.0), 1)]
    e = attack.vectors
    d = attack.ancilla_dim
    rho = np.zeros((4 * d, 4 * d), dtype=complex)
    for bit, (c0, c1) in enumerate(key_states):
        first, second = c0 * e[0] + c1 * e[2], c0 * e[1] + c1 * e[3]
        for (o0, o1), guess in guesses:
            v = np.kron(np.eye(4)[2 * bit + guess], o0 * first + o1 * second)
            rho += np.outer(v, v.conj())
    return rho / np.trace(rho).real


@pytest.mark.parametrize("seed", range(3))
def test_b92_state_traced_over_bob_matches_the_pair_state(seed):
    attack = random_attack(seed)
    rho_abe = _b92_state_with_bob(attack, 0.342)
    rho_ae = partial_trace(rho_abe, (2, 2, attack.ancilla_dim), keep=(0, 2))
    direct, _ = state_from_pairs(b92_pairs(attack, 0.342))
    assert np.allclose(rho_ae, direct, atol=1e-12)


@pytest.mark.parametrize("Q", [0.03, 0.08])
@pytest.mark.parametrize("psi", [3, 4])
@pytest.mark.parametrize("alpha_key", [0.2, 0.342])
def test_simulated_depolarizing_statistics_match_the_symmetric_rate(Q, psi, alpha_key):
    stats = simulate_stats(depolarizing_attack(Q), BasisConfig(), psi=psi)
    simulated = b92_keyrate(estimate_one_way(stats), alpha_key, stats)
    assert math.isclose(simulated.rate, b92_symmetric(Q, alpha_key, psi).rate, abs_tol=1e-6)


@pytest.mark.parametrize("psi", [3, 4])
def test_optpi_relabeled_bb84_encoding_gives_the_same_rate(psi):
    gram = estimate_one_way(simulate_stats(random_attack(13), BasisConfig(), psi=psi))
    relabeled = optpi_keyrate(gram, OptPiParams(0.0, 1.0, 0.0, 1.0))
    assert math.isclose(relabeled.rate, optpi_keyrate(gram, OptPiParams.bb84()).rate, abs_tol=1e-9)


@pytest.mark.parametrize("psi", [3, 4])
@pytest.mark.parametrize("alpha_key", [0.0, 0.1, 0.342, 0.643])
def test_best_pairing_never_lowers_the_rate(psi, alpha_key):
    gram = estimate_one_way(bundled_stats().restricted(psi))
    fixed = b92_keyrate(gram, alpha_key)
    best = b92_keyrate(gram, alpha_key, pairing="best")
    assert best.rate >= fixed.rate - 1e-6
    if "re_12" in best.minimizer:
        assert gram.free_interval().contains(best.minimizer["re_12"])


def test_alpha_key_domain():
    with pytest.raises(DomainError):
        b92_symmetric(0.05, 1.0, 4)
    with pytest.raises(DomainError):
        b92_symmetric(0.6, 0.0, 4)


def test_bb84_parameters_reproduce_b92_rows():
    zero, one = optpi_coefficients(OptPiParams.bb84())
    b92_zero, b92_one = b92_coefficients(0.0)
    assert np.allclose(zero, b92_zero)
    assert np.allclose(one, b92_one)


def test_optpi_at_bb84_point_matches_bb84():
    gram = GramEstimates.symmetric(0.07, 4)
    assert math.isclose(
        optpi_keyrate(gram, OptPiParams.bb84()).rate, bb84_keyrate(gram).rate, abs_tol=1e-12
    )


def test_optimizer_keeps_bb84_on_symmetric_channel():
    gram = GramEstimates.symmetric(0.07, 4)
    settings = SolverSettings(optpi_starts=8)
    params, report = optpi_optimize(gram, budget=2000, settings=settings)
    assert math.isclose(report.rate, 0.349, abs_tol=5e-3)
    assert report.params == params


def test_rotated_channel_defeats_bb84_but_not_a_rotated_encoding():
    stats = simulate_stats(rotation_attack(math.pi / 2, 0.03), BasisConfig(), psi=4)
    gram = estimate_one_way(stats)
    bb84 = bb84_keyrate(gram, stats)
    rotated = optpi_keyrate(gram, OptPiParams(1.0, 0.0, 1 / math.sqrt(2), -1 / math.sqrt(2)), stats)
    assert bb84.rate <= 1e-9
    assert rotated.rate > 0.3

    _, optimized = optpi_optimize(gram, stats, budget=2000, settings=SolverSettings(optpi_starts=8))
    assert optimized.rate >= bb84.rate - 1e-12


def test_seeded_drift_channels_include_one_where_only_an_optimized_encoder_keeps_a_rate():
    settings = SolverSettings(optpi_starts=8)
    winners = []
    for seed in range(20):
        stats = simulate_stats(drift_attack(seed, math.pi / 2, coupling=0.05, Q=0.02), BasisConfig(), psi=4)
        gram = estimate_one_way(stats)
        if bb84_keyrate(gram, stats).rate > 0.0:
            continue
        _, optimized = optpi_optimize(gram, stats, budget=4000, settings=settings)
        if optimized.rate > 0.01:
            winners.append(seed)
            break
    assert winners


def test_optpi_params_are_bounded():
    with pytest.raises(DomainError):
        OptPiParams(1.2, 0.0, 1.0, 0.0)
    clipped = OptPiParams.from_array([1.5, -2.0, 0.3, 0.0])
    assert clipped.alpha_s == 1.0 and clipped.gamma_s == -1.0


@pytest.mark.parametrize("scenario, expected", [("correlated", 0.110), ("independent", 0.079)])
def test_sqkd_thresholds(scenario, expected):
    q = threshold(lambda Q: sqkd_symmetric(Q, scenario))
    assert math.isclose(q, expected, abs_tol=1e-3)
    # strictly better than the bounds obtained without mismatched statistics
    assert q > {"correlated": 0.0534, "independent": 0.0457}[scenario]


def test_sqkd_symmetric_rate_is_positive_below_threshold():
    report = sqkd_symmetric(0.05, "correlated")
    assert report.rate > 0
    assert set(report.minimizer) == {"E_1", "E_2", "E_3", "E_4"}


def test_sqkd_unknown_scenario():
    with pytest.raises(DomainError):
        sqkd_symmetric(0.05, "sideways")
