"""Invert observed statistics into estimates of Eve's ancilla inner products."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from .attack import BasisConfig, OneWayAttack, simulate_stats
from .errors import DomainError, InfeasibleConstraintsError, InvarianceError
from .stats import INV_SQRT2, AttackStats, TwoWayStats

logger = logging.getLogger(__name__)

PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2))
CS_SLACK = 1e-9
INVARIANCE_TOL = 1e-8
ALPHA_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(float(value), float(value))

    @classmethod
    def symmetric(cls, radius: float) -> "Interval":
        return cls(-radius, radius)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.hi == self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, value: float, tol: float = CS_SLACK) -> bool:
        return self.lo - tol <= value <= self.hi + tol

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)


@dataclass(frozen=True)
class GramEstimates:
    """Point values or intervals for Re/Im <e_i|e_j> and the norms <e_i|e_i>.

    Under Psi3, re(1,2) is free inside ``re[(1, 2)]`` and re(0,3) is tied to
    it through ``re_sum = re(0,3) + re(1,2)``.
    """

    psi: int
    norms: Tuple[float, float, float, float]
    re: Dict[Tuple[int, int], Interval]
    im: Dict[Tuple[int, int], Interval]
    re_sum: float

    def __post_init__(self) -> None:
        missing = [p for p in PAIRS if p not in self.re or p not in self.im]
        if missing:
            raise DomainError(f"gram estimates missing pairs {missing}")
        if any(n < -CS_SLACK for n in self.norms):
            raise DomainError(f"negative norm in {self.norms}")

    def free_interval(self) -> Interval:
        return self.re[(1, 2)]

    def value(self, i: int, j: int) -> float:
        """Point value of re(i,j); raises when the statistics leave it free."""
        interval = self.re[(i, j)]
        if not interval.is_point:
            raise DomainError(f"re({i},{j}) is not point-identified")
        return interval.lo

    def realize(self, re12: Optional[float] = None) -> np.ndarray:
        """Real symmetric 4×4 matrix of Re <e_i|e_j> for a choice of the free parameter."""
        free = self.free_interval()
        if free.is_point:
            re12 = free.lo
        elif re12 is None:
            raise DomainError("re(1,2) is free; a value must be supplied")
        values = {p: self.re[p].lo for p in PAIRS[:4]}
        values[(1, 2)] = float(re12)
        values[(0, 3)] = self.re_sum - float(re12)
        gram = np.diag(np.asarray(self.norms, dtype=float))
        for (i, j), v in values.items():
            gram[i, j] = gram[j, i] = v
        return gram

    def realize_many(self, re12: np.ndarray) -> np.ndarray:
        """Stack of realized matrices for an array of re(1,2) values, shape (n, 4, 4)."""
        re12 = np.atleast_1d(np.asarray(re12, dtype=float))
        base = self.realize(self.free_interval().lo)
        stack = np.repeat(base[None, :, :], re12.size, axis=0)
        stack[:, 1, 2] = stack[:, 2, 1] = re12
        stack[:, 0, 3] = stack[:, 3, 0] = self.re_sum - re12
        return stack

    @classmethod
    def symmetric(cls, Q: float, psi: int) -> "GramEstimates":
        """Estimates produced by a depolarizing channel with parameter Q."""
        return estimate_one_way(AttackStats.depolarizing(Q, psi))

    def as_values(self) -> Dict[str, float]:
        """Flat key/value view used by the gram text format."""
        out: Dict[str, float] = {"psi": float(self.psi)}
        for idx, norm in enumerate(self.norms):
            out[f"norm_{idx}"] = norm
        for prefix, table in (("re", self.re), ("im", self.im)):
            for i, j in PAIRS:
                interval = table[(i, j)]
                key = f"{prefix}_{i}{j}"
                if interval.is_point:
                    out[key] = interval.lo
                else:
                    out[f"{key}_lo"] = interval.lo
                    out[f"{key}_hi"] = interval.hi
        if not self.free_interval().is_point:
            out["re_sum"] = self.re_sum
        return out

    @classmethod
    def from_values(cls, values: Dict[str, float]) -> "GramEstimates":
        try:
            psi = int(values["psi"])
            norms = tuple(values[f"norm_{k}"] for k in range(4))
        except KeyError as exc:
            raise DomainError(f"gram is missing {exc.args[0]}") from None

        def interval(key: str) -> Interval:
            if key in values:
                return Interval.point(values[key])
            try:
                return Interval(values[f"{key}_lo"], values[f"{key}_hi"])
            except KeyError:
                raise DomainError(f"gram is missing {key}") from None

        re = {(i, j): interval(f"re_{i}{j}") for i, j in PAIRS}
        im = {(i, j): interval(f"im_{i}{j}") for i, j in PAIRS}
        re_sum = values.get("re_sum", re[(0, 3)].lo + re[(1, 2)].lo)
        return cls(psi=psi, norms=norms, re=re, im=im, re_sum=re_sum)


def _require_open_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} = {value} must lie strictly inside (0, 1) for estimation")


def _cs(norms: Sequence[float], i: int, j: int) -> float:
    return math.sqrt(max(norms[i], 0.0) * max(norms[j], 0.0))


def estimate_one_way(stats: AttackStats) -> GramEstimates:
    """Gram estimates from mismatched-basis statistics.

    Norms come from the Z block; re(0,1), re(2,3), re(0,2) from the A-basis
    rows; under Psi4 the B-basis rows add the imaginary parts and split
    re(0,3) from re(1,2).
    """
    alpha = stats.alpha
    _require_open_unit("alpha", alpha)
    alpha_bar = math.sqrt(1.0 - alpha * alpha)
    a2, ab2, aab = alpha * alpha, alpha_bar * alpha_bar, alpha * alpha_bar

    required = [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1"), ("0", "a"), ("1", "a"), ("a", "0"), ("a", "abar")]
    if stats.psi == 4:
        _require_open_unit("beta", stats.beta)
        required += [("0", "b"), ("1", "b"), ("b", "0"), ("b", "bbar")]
    stats.require(required)

    p00, p01, p10, p11 = stats.z_block()
    norms = (p00, p01, p10, p11)
    re01 = (stats.p("0", "a") - a2 * p00 - ab2 * p01) / (2 * aab)
    re23 = (stats.p("1", "a") - a2 * p10 - ab2 * p11) / (2 * aab)
    re02 = (stats.p("a", "0") - a2 * p00 - ab2 * p10) / (2 * aab)
    re13 = -re02

    # p_{a,abar} = K_a - 2 a^2 abar^2 (re03 + re12)
    k_a = (
        a2 * ab2 * (p00 + p11)
        + a2 * a2 * p01
        + ab2 * ab2 * p10
        + 2 * (-a2 * aab * re01 + ab2 * aab * re02 + a2 * aab * re13 - ab2 * aab * re23)
    )
    re_sum = (k_a - stats.p("a", "abar")) / (2 * a2 * ab2)

    re: Dict[Tuple[int, int], Interval] = {
        (0, 1): Interval.point(re01),
        (2, 3): Interval.point(re23),
        (0, 2): Interval.point(re02),
        (1, 3): Interval.point(re13),
    }
    im: Dict[Tuple[int, int], Interval] = {
        (0, 3): Interval.symmetric(_cs(norms, 0, 3)),
        (1, 2): Interval.symmetric(_cs(norms, 1, 2)),
    }

    if stats.psi == 4:
        beta = stats.beta
        beta_bar = math.sqrt(1.0 - beta * beta)
        b2, bb2, bbb = beta * beta, beta_bar * beta_bar, beta * beta_bar
        im01 = (stats.p("0", "b") - b2 * p00 - bb2 * p01) / (2 * bbb)
        im23 = (stats.p("1", "b") - b2 * p10 - bb2 * p11) / (2 * bbb)
        im02 = (b2 * p00 + bb2 * p10 - stats.p("b", "0")) / (2 * bbb)
        im13 = -im02
        # p_{b,bbar} = K_b - 2 b^2 bbar^2 (re03 - re12)
        k_b = (
            b2 * bb2 * (p00 + p11)
            + b2 * b2 * p01
            + bb2 * bb2 * p10
            - 2 * b2 * bbb * (im01 + im13)
            - 2 * bb2 * bbb * (im02 + im23)
        )
        re_diff = (k_b - stats.p("b", "bbar")) / (2 * b2 * bb2)
        re[(0, 3)] = Interval.point(0.5 * (re_sum + re_diff))
        re[(1, 2)] = Interval.point(0.5 * (re_sum - re_diff))
        im.update(
            {
                (0, 1): Interval.point(im01),
                (2, 3): Interval.point(im23),
                (0, 2): Interval.point(im02),
                (1, 3): Interval.point(im13),
            }
        )
    else:
        cap12 = _cs(norms, 1, 2)
        cap03 = _cs(norms, 0, 3)
        lo = max(-cap12, re_sum - cap03)
        hi = min(cap12, re_sum + cap03)
        if lo > hi + CS_SLACK:
            raise InfeasibleConstraintsError(
                f"no re(1,2) satisfies Cauchy-Schwarz with re(0,3) + re(1,2) = {re_sum:.6g}"
            )
        hi = max(hi, lo)
        re[(1, 2)] = Interval(lo, hi)
        re[(0, 3)] = Interval(re_sum - hi, re_sum - lo)
        cap02 = min(_cs(norms, 0, 2), _cs(norms, 1, 3))
        im.update(
            {
                (0, 1): Interval.symmetric(_cs(norms, 0, 1)),
                (2, 3): Interval.symmetric(_cs(norms, 2, 3)),
                (0, 2): Interval.symmetric(cap02),
                (1, 3): Interval.symmetric(cap02),
            }
        )

    logger.debug("[Tomography] psi=%d re(0,3)+re(1,2)=%.6g", stats.psi, re_sum)
    return GramEstimates(psi=stats.psi, norms=norms, re=re, im=im, re_sum=re_sum)


# B's key bit i, the forward ancilla index j = 2x + i and A's final outcome k
SECOND_HOP = ((0, 0), (1, 1), (0, 2), (1, 3))
# (g_i^0, g_i^1) pairs of the reflect/resend state, as (i, j, k) triples
SQKD_PAIRS = (
    ((0, 0, 0), (1, 3, 1)),
    ((0, 2, 0), (1, 1, 1)),
    ((0, 0, 1), (1, 3, 0)),
    ((0, 2, 1), (1, 1, 0)),
)


@dataclass(frozen=True)
class TwoWayGram:
    """Observable two-way quantities feeding the reverse-reconciliation bound.

    ``norms[(i, j, k)]`` is <e_{i,j}^k|e_{i,j}^k>; ``second_re[(i, j)]`` is
    Re <e_{i,j}^0|e_{i,j}^1>. The unknown overlaps E_1..E_4 of the four
    key pairs satisfy E_1 + E_2 + E_3 + E_4 = ``c`` and |E_i| <= ``caps[i]``.
    """

    norms: Dict[Tuple[int, int, int], float]
    second_re: Dict[Tuple[int, int], float]
    s0: float
    s1: float
    qa: float
    c: float
    reflect: Optional[GramEstimates] = None
    caps: Tuple[float, float, float, float] = field(init=False)

    def __post_init__(self) -> None:
        if any(v < -CS_SLACK for v in self.norms.values()):
            raise DomainError("negative second-hop norm")
        if not -4.0 <= self.c <= 4.0:
            raise DomainError(f"constraint constant c = {self.c} outside [-4, 4]")
        caps = tuple(
            math.sqrt(max(self.norms[first], 0.0) * max(self.norms[second], 0.0)) for first, second in SQKD_PAIRS
        )
        object.__setattr__(self, "caps", caps)

    def pair_norms(self) -> List[Tuple[float, float]]:
        return [(self.norms[first], self.norms[second]) for first, second in SQKD_PAIRS]

    def joint_key_distribution(self) -> List[float]:
        """P(B=i, A=k), A's two Z states sent with probability 1/2."""
        return [
            0.5 * sum(self.norms[(i, j, k)] for ii, j in SECOND_HOP if ii == i)
            for i in (0, 1)
            for k in (0, 1)
        ]

    @classmethod
    def symmetric(cls, Q: float, qa: float) -> "TwoWayGram":
        return estimate_two_way(TwoWayStats.symmetric(Q, qa))

    def as_values(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for (i, j, k), value in sorted(self.norms.items()):
            out[f"n_{i}{j}{k}"] = value
        for (i, j), value in sorted(self.second_re.items()):
            out[f"r_{i}{j}"] = value
        out.update({"s_0": self.s0, "s_1": self.s1, "qa": self.qa, "c": self.c})
        for idx, cap in enumerate(self.caps, start=1):
            out[f"cap_{idx}"] = cap
        return out

    @classmethod
    def from_values(cls, values: Dict[str, float]) -> "TwoWayGram":
        try:
            norms = {(i, j, k): values[f"n_{i}{j}{k}"] for i, j in SECOND_HOP for k in (0, 1)}
            second_re = {(i, j): values[f"r_{i}{j}"] for i, j in SECOND_HOP}
            return cls(
                norms=norms,
                second_re=second_re,
                s0=values["s_0"],
                s1=values["s_1"],
                qa=values["qa"],
                c=values["c"],
            )
        except KeyError as exc:
            raise DomainError(f"two-way gram is missing {exc.args[0]}") from None


def estimate_two_way(tw: TwoWayStats) -> TwoWayGram:
    """Two-way estimates; only the |a> = |+> estimation basis is supported."""
    if abs(tw.alpha - INV_SQRT2) > ALPHA_TOL or abs(tw.reflect.alpha - INV_SQRT2) > ALPHA_TOL:
        raise DomainError("two-way estimation requires alpha = 1/sqrt(2)")

    norms: Dict[Tuple[int, int, int], float] = {}
    second_re: Dict[Tuple[int, int], float] = {}
    for i, j in SECOND_HOP:
        sent, mid = str(j // 2), str(i)
        for k in (0, 1):
            norms[(i, j, k)] = tw.weighted(sent, mid, str(k))
        second_re[(i, j)] = tw.weighted(sent, mid, "a") - 0.5 * tw.p_mid(sent, mid)

    cross = []
    for i, (first, second) in ((0, (0, 2)), (1, (1, 3))):
        mid = str(i)
        # 2 p_{a,i} (p_{a,i,a} - 1/2) minus the two diagonal second-hop terms
        cross.append(
            2 * (tw.weighted("a", mid, "a") - 0.5 * tw.p_mid("a", mid))
            - second_re[(i, first)]
            - second_re[(i, second)]
        )
    s0, s1 = cross

    reflect = estimate_one_way(tw.reflect)
    c = 1.0 - 2.0 * tw.qa - reflect.value(0, 1) - reflect.value(2, 3) - s0 - s1
    logger.debug("[Tomography] two-way c=%.6g S0=%.6g S1=%.6g", c, s0, s1)
    return TwoWayGram(norms=norms, second_re=second_re, s0=s0, s1=s1, qa=tw.qa, c=c, reflect=reflect)


def _point_signature(g: GramEstimates) -> np.ndarray:
    values = list(g.norms) + [g.re_sum]
    for p in PAIRS:
        for table in (g.re, g.im):
            values.extend((table[p].lo, table[p].hi))
    return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class InvarianceReport:
    pairs: Tuple[Tuple[float, float], ...]
    reference: GramEstimates
    max_deviation: float


def alpha_beta_invariance_check(
    attack: OneWayAttack, alphas: Iterable[float], betas: Iterable[float], psi: int = 4
) -> InvarianceReport:
    """Estimate the same attack under every (alpha, beta) pair and require identical results."""
    pairs = [(float(a), float(b)) for a in alphas for b in betas]
    if not pairs:
        raise DomainError("no (alpha, beta) pairs to compare")
    for a, b in pairs:
        _require_open_unit("alpha", a)
        _require_open_unit("beta", b)

    reference: Optional[GramEstimates] = None
    ref_signature: Optional[np.ndarray] = None
    worst = 0.0
    for pair in pairs:
        estimate = estimate_one_way(simulate_stats(attack, BasisConfig(*pair), psi))
        signature = _point_signature(estimate)
        if reference is None:
            reference, ref_signature = estimate, signature
            continue
        deviation = float(np.max(np.abs(signature - ref_signature)))
        worst = max(worst, deviation)
        if deviation > INVARIANCE_TOL:
            raise InvarianceError(
                f"estimates at alpha={pair[0]:.6g}, beta={pair[1]:.6g} differ by {deviation:.3g}", pair
            )
    return InvarianceReport(pairs=tuple(pairs), reference=reference, max_deviation=worst)
