"""Key rates for Extended B92 / BB84, the optimized Opt-Pi encoding and the two-way SQKD protocol.

Every one-way protocol here yields a key-state of the form
rho_ABE = sum over (A, B) of |AB><AB| ⊗ |g><g| where each g is a real
combination of Eve's ancilla vectors e0..e3. With a realized Gram matrix R
of Re<e_i|e_j>, Re<x|y> = a^T R b for coefficient vectors a and b.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from .attack import OneWayAttack, TwoWayAttack
from .bound import PairTerm, best_pairing_values, bound_values, conditional_shannon
from .config import SolverSettings
from .errors import DomainError, InfeasibleConstraintsError
from .solver import bisect_root, minimize_box, minimize_interval, multistart_maximize
from .stats import AttackStats
from .tomography import SQKD_PAIRS, GramEstimates, TwoWayGram, estimate_one_way

logger = logging.getLogger(__name__)

THRESHOLD_ALPHAS = (0.0, 0.342, 0.643, 0.939, 0.985)
EXAMPLE_ALPHAS = (0.0, 0.1, 0.2, 0.342, 0.643)
SQKD_SCENARIOS = ("independent", "correlated")
PAIRING_MODES = ("fixed", "best")
THRESHOLD_BRACKET = (0.0, 0.3)
CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class OptPiParams:
    """Encoder (alpha_s, gamma_s) and decoder (alpha_r, gamma_r) amplitudes on |0>."""

    alpha_s: float
    gamma_s: float
    alpha_r: float
    gamma_r: float

    def __post_init__(self) -> None:
        for name in ("alpha_s", "gamma_s", "alpha_r", "gamma_r"):
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise DomainError(f"{name} = {value} outside [-1, 1]")

    @staticmethod
    def _bar(x: float) -> float:
        return math.sqrt(max(0.0, 1.0 - x * x))

    @property
    def beta_s(self) -> float:
        return self._bar(self.alpha_s)

    @property
    def delta_s(self) -> float:
        return self._bar(self.gamma_s)

    @property
    def beta_r(self) -> float:
        return self._bar(self.alpha_r)

    @property
    def delta_r(self) -> float:
        return self._bar(self.gamma_r)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_s, self.gamma_s, self.alpha_r, self.gamma_r])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "OptPiParams":
        clipped = np.clip(np.asarray(values, dtype=float), -1.0, 1.0)
        return cls(*(float(v) for v in clipped))

    @classmethod
    def bb84(cls) -> "OptPiParams":
        return cls(1.0, 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class KeyRateReport:
    protocol: str
    psi: int
    entropy_bound: float
    cond_shannon: float
    alpha_key: Optional[float] = None
    minimizer: Dict[str, float] = field(default_factory=dict)
    params: Optional[OptPiParams] = None
    pairing: str = "fixed"
    rate: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rate", self.entropy_bound - self.cond_shannon)

    @property
    def distillable(self) -> float:
        return max(self.rate, 0.0)


# -- coefficient vectors -------------------------------------------------------


def b92_coefficients(alpha_key: float) -> Tuple[np.ndarray, np.ndarray]:
    """Rows (g_1^0, g_2^0) and (g_1^1, g_2^1) over e0..e3 for key states |0> and |a>."""
    if not 0.0 <= alpha_key < 1.0:
        raise DomainError(f"alpha_key = {alpha_key} must lie in [0, 1)")
    a = alpha_key
    ab = math.sqrt(1.0 - a * a)
    zero = np.array([[ab, -a, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    one = np.array([[0.0, a, 0.0, ab], [a * ab, -a * a, ab * ab, -a * ab]])
    return zero, one


def optpi_coefficients(params: OptPiParams) -> Tuple[np.ndarray, np.ndarray]:
    a_s, b_s, g_s, d_s = params.alpha_s, params.beta_s, params.gamma_s, params.delta_s
    a_r, b_r, g_r, d_r = params.alpha_r, params.beta_r, params.gamma_r, params.delta_r
    f0 = np.array([a_s, 0.0, b_s, 0.0])
    f1 = np.array([0.0, a_s, 0.0, b_s])
    f2 = np.array([g_s, 0.0, d_s, 0.0])
    f3 = np.array([0.0, g_s, 0.0, d_s])
    zero = np.vstack([a_r * f0 + b_r * f1, g_r * f0 + d_r * f1])
    one = np.vstack([g_r * f2 + d_r * f3, a_r * f2 + b_r * f3])
    return zero, one


def _explicit(attack: OneWayAttack, zero: np.ndarray, one: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    g0 = zero @ attack.vectors
    g1 = one @ attack.vectors
    return list(zip(g0, g1))


def b92_pairs(attack: OneWayAttack, alpha_key: float) -> List[Tuple[np.ndarray, np.ndarray]]:
    return _explicit(attack, *b92_coefficients(alpha_key))


def optpi_pairs(attack: OneWayAttack, params: OptPiParams) -> List[Tuple[np.ndarray, np.ndarray]]:
    return _explicit(attack, *optpi_coefficients(params))


def sqkd_pairs(attack: TwoWayAttack) -> List[Tuple[np.ndarray, np.ndarray]]:
    return [(attack.e(*first), attack.e(*second)) for first, second in SQKD_PAIRS]


# -- one-way evaluation -------------------------------------------------------


def _pair_quantities(zero: np.ndarray, one: np.ndarray, grams: np.ndarray):
    n0 = np.einsum("mi,nij,mj->nm", zero, grams, zero)
    n1 = np.einsum("mi,nij,mj->nm", one, grams, one)
    cross = np.einsum("mi,nij,kj->nmk", zero, grams, one)
    return n0, n1, cross


def _entropy_values(zero, one, grams, pairing: str) -> Tuple[np.ndarray, np.ndarray]:
    n0, n1, cross = _pair_quantities(zero, one, grams)
    if pairing == "best":
        return best_pairing_values(n0, n1, cross)
    return bound_values(n0, n1, np.diagonal(cross, axis1=1, axis2=2))


def _check_consistent(gram: GramEstimates, stats: Optional[AttackStats]) -> None:
    if stats is None:
        return
    if stats.psi != gram.psi:
        raise DomainError(f"stats use psi={stats.psi} but the gram was estimated with psi={gram.psi}")
    if np.max(np.abs(np.subtract(stats.z_block(), gram.norms))) > CONSISTENCY_TOL:
        raise DomainError("gram norms disagree with the Z-basis statistics")


def pair_terms(gram: GramEstimates, zero: np.ndarray, one: np.ndarray, re12: Optional[float] = None) -> List[PairTerm]:
    """Theorem terms for a realized gram, overlaps clipped to their Cauchy-Schwarz caps."""
    realized = gram.realize(re12)
    terms = []
    for z, o in zip(zero, one):
        n0, n1 = float(z @ realized @ z), float(o @ realized @ o)
        cap = math.sqrt(max(n0, 0.0) * max(n1, 0.0))
        terms.append(PairTerm(n0, n1, float(np.clip(z @ realized @ o, -cap, cap))))
    return terms


def _one_way_rate(
    gram: GramEstimates,
    zero: np.ndarray,
    one: np.ndarray,
    settings: SolverSettings,
    pairing: str,
) -> Tuple[float, float, Dict[str, float]]:
    """(entropy bound, H(A|B), minimizer) with E choosing the free re(1,2)."""
    if pairing not in PAIRING_MODES:
        raise DomainError(f"unknown pairing mode '{pairing}'")

    def raw(x: np.ndarray):
        return _entropy_values(zero, one, gram.realize_many(x), pairing)

    def feasible_only(x: np.ndarray) -> np.ndarray:
        values, feasible = raw(x)
        return np.where(feasible, values, np.inf)

    def clamped(x: np.ndarray) -> np.ndarray:
        return raw(x)[0]

    free = gram.free_interval()
    minimizer: Dict[str, float] = {}
    if free.is_point:
        values, feasible = raw(np.array([free.lo]))
        if not feasible[0]:
            logger.warning("[KeyRate] Estimated overlaps break Cauchy-Schwarz; lambda clamped to 1")
        bound, re12 = float(values[0]), free.lo
    else:
        try:
            best = minimize_interval(feasible_only, free.lo, free.hi, settings)
        except InfeasibleConstraintsError:
            logger.warning("[KeyRate] No re(1,2) keeps every overlap physical; lambda clamped to 1")
            best = minimize_interval(clamped, free.lo, free.hi, settings)
        bound, re12 = best.value, float(best.x[0])
        minimizer["re_12"] = re12

    n0, n1, _ = _pair_quantities(zero, one, gram.realize_many(np.array([re12])))
    # joint over (A, B): (0,0) pair-1 zero, (0,1) pair-2 zero, (1,0) pair-2 one, (1,1) pair-1 one
    joint = np.array([n0[0, 0], n0[0, 1], n1[0, 1], n1[0, 0]])
    joint = np.clip(joint, 0.0, None)
    total = joint.sum()
    if total <= 0.0:
        raise DomainError("every outcome is inconclusive; no raw key")
    cond = conditional_shannon(joint / total, (2, 2), given=1)
    return bound, cond, minimizer


def b92_keyrate(
    gram: GramEstimates,
    alpha_key: float,
    stats: Optional[AttackStats] = None,
    settings: Optional[SolverSettings] = None,
    pairing: str = "fixed",
) -> KeyRateReport:
    """Extended B92 key rate with key states |0> and |a>, a = alpha_key|0> + abar|1>."""
    _check_consistent(gram, stats)
    settings = settings or SolverSettings()
    zero, one = b92_coefficients(alpha_key)
    bound, cond, minimizer = _one_way_rate(gram, zero, one, settings, pairing)
    logger.debug("[KeyRate] b92 alpha=%.6g psi=%d bound=%.9g H=%.9g", alpha_key, gram.psi, bound, cond)
    return KeyRateReport(
        protocol="b92",
        psi=gram.psi,
        entropy_bound=bound,
        cond_shannon=cond,
        alpha_key=alpha_key,
        minimizer=minimizer,
        pairing=pairing,
    )


def bb84_keyrate(
    gram: GramEstimates,
    stats: Optional[AttackStats] = None,
    settings: Optional[SolverSettings] = None,
    pairing: str = "fixed",
) -> KeyRateReport:
    report = b92_keyrate(gram, 0.0, stats, settings, pairing)
    return KeyRateReport(
        protocol="bb84",
        psi=report.psi,
        entropy_bound=report.entropy_bound,
        cond_shannon=report.cond_shannon,
        alpha_key=0.0,
        minimizer=report.minimizer,
        pairing=pairing,
    )


def _check_noise(Q: float) -> None:
    if not 0.0 <= Q < 0.5:
        raise DomainError(f"noise level Q = {Q} outside [0, 1/2)")


def b92_symmetric(
    Q: float, alpha_key: float, psi: int, settings: Optional[SolverSettings] = None, pairing: str = "fixed"
) -> KeyRateReport:
    """B92 rate on a depolarizing channel of noise Q."""
    _check_noise(Q)
    return b92_keyrate(GramEstimates.symmetric(Q, psi), alpha_key, settings=settings, pairing=pairing)


def optpi_keyrate(
    gram: GramEstimates,
    params: OptPiParams,
    stats: Optional[AttackStats] = None,
    settings: Optional[SolverSettings] = None,
    pairing: str = "fixed",
) -> KeyRateReport:
    _check_consistent(gram, stats)
    settings = settings or SolverSettings()
    zero, one = optpi_coefficients(params)
    bound, cond, minimizer = _one_way_rate(gram, zero, one, settings, pairing)
    return KeyRateReport(
        protocol="optpi",
        psi=gram.psi,
        entropy_bound=bound,
        cond_shannon=cond,
        minimizer=minimizer,
        params=params,
        pairing=pairing,
    )


def optpi_optimize(
    gram: GramEstimates,
    stats: Optional[AttackStats] = None,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[OptPiParams, KeyRateReport]:
    """Search [-1, 1]^4 for the encoder/decoder maximizing the Opt-Pi key rate.

    The BB84 encoding is always the first start, followed by seeded random
    starts; the evaluation budget is split evenly between them.
    """
    _check_consistent(gram, stats)
    settings = settings or SolverSettings()
    budget = settings.optpi_budget if budget is None else budget
    seed = settings.optpi_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    starts = [OptPiParams.bb84().as_array()] + list(rng.uniform(-1.0, 1.0, size=(settings.optpi_starts, 4)))

    def objective(x: np.ndarray) -> float:
        try:
            return optpi_keyrate(gram, OptPiParams.from_array(x), settings=settings).rate
        except (DomainError, InfeasibleConstraintsError):
            return -np.inf

    best_x, best_rate = multistart_maximize(objective, starts, budget)
    params = OptPiParams.from_array(best_x)
    logger.info("[OptPi] Best rate %.6g at %s", best_rate, np.array2string(params.as_array(), precision=4))
    return params, optpi_keyrate(gram, params, settings=settings)


# -- two-way protocol ---------------------------------------------------------


def sqkd_keyrate(twgram: TwoWayGram, settings: Optional[SolverSettings] = None) -> KeyRateReport:
    """Reverse-reconciliation rate S(B|E) - H(B|A) minimized over the unknown overlaps E_1..E_4."""
    settings = settings or SolverSettings()
    norms = np.asarray(twgram.pair_norms(), dtype=float)
    n0, n1 = norms[:, 0], norms[:, 1]
    caps = np.asarray(twgram.caps, dtype=float)
    c = twgram.c

    def objective(rest: np.ndarray) -> np.ndarray:
        rest = np.atleast_2d(rest)
        first = c - rest.sum(axis=1)
        overlaps = np.column_stack([first, rest])
        values, feasible = bound_values(n0, n1, overlaps)
        ok = feasible & (np.abs(first) <= caps[0] + CONSISTENCY_TOL)
        return np.where(ok, values, np.inf)

    try:
        best = minimize_box(objective, -caps[1:], caps[1:], settings)
    except InfeasibleConstraintsError:
        raise InfeasibleConstraintsError(
            f"no overlaps within the Cauchy-Schwarz caps sum to c = {c:.6g}"
        ) from None
    e_rest = np.asarray(best.x, dtype=float)
    minimizer = {"E_1": float(c - e_rest.sum())}
    minimizer.update({f"E_{k}": float(v) for k, v in enumerate(e_rest, start=2)})

    joint = np.clip(np.asarray(twgram.joint_key_distribution(), dtype=float), 0.0, None)
    total = joint.sum()
    if total <= 0.0:
        raise DomainError("two-way statistics carry no raw key")
    cond = conditional_shannon(joint / total, (2, 2), given=1)
    return KeyRateReport(protocol="sqkd", psi=3, entropy_bound=best.value, cond_shannon=cond, minimizer=minimizer)


def sqkd_reflect_error(Q: float, scenario: str) -> float:
    if scenario == "independent":
        return 2.0 * Q * (1.0 - Q)
    if scenario == "correlated":
        return Q
    raise DomainError(f"unknown scenario '{scenario}', expected one of {SQKD_SCENARIOS}")


def sqkd_symmetric(Q: float, scenario: str, settings: Optional[SolverSettings] = None) -> KeyRateReport:
    _check_noise(Q)
    return sqkd_keyrate(TwoWayGram.symmetric(Q, sqkd_reflect_error(Q, scenario)), settings)


# -- thresholds and tables ----------------------------------------------------


def threshold(
    rate: Callable[[float], KeyRateReport],
    lo: float = THRESHOLD_BRACKET[0],
    hi: float = THRESHOLD_BRACKET[1],
    tol: Optional[float] = None,
) -> float:
    """Noise level in [lo, hi] where the key rate crosses zero."""
    tol = SolverSettings().threshold_tol if tol is None else tol
    return bisect_root(lambda q: rate(q).rate, lo, hi, tol)


def threshold_table(
    psi: int, alphas: Sequence[float] = THRESHOLD_ALPHAS, settings: Optional[SolverSettings] = None
) -> List[Tuple[float, float]]:
    """(alpha, tolerated noise) for B92 on depolarizing channels."""
    settings = settings or SolverSettings()
    rows = []
    for alpha in alphas:
        q = threshold(lambda Q: b92_symmetric(Q, alpha, psi, settings), tol=settings.threshold_tol)
        logger.info("[Table] psi=%d alpha=%.3f threshold %.4f", psi, alpha, q)
        rows.append((alpha, q))
    return rows


def sqkd_threshold_table(settings: Optional[SolverSettings] = None) -> List[Tuple[str, float]]:
    settings = settings or SolverSettings()
    return [
        (scenario, threshold(lambda Q: sqkd_symmetric(Q, scenario, settings), tol=settings.threshold_tol))
        for scenario in SQKD_SCENARIOS
    ]


def b92_rate_table(
    stats: AttackStats, alphas: Sequence[float] = EXAMPLE_ALPHAS, settings: Optional[SolverSettings] = None
) -> List[KeyRateReport]:
    """B92 rates for each key-distillation alpha, first under Psi3 then Psi4 (when available)."""
    modes = (3, 4) if stats.psi == 4 else (3,)
    reports = []
    for psi in modes:
        gram = estimate_one_way(stats.restricted(psi))
        reports.extend(b92_keyrate(gram, alpha, settings=settings) for alpha in alphas)
    return reports
