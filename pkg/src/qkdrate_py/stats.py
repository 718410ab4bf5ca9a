"""Observable channel statistics for one-way and two-way parameter estimation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple
import math

from .errors import DomainError, IncompleteStatisticsError

PSI_MODES = (3, 4)
NORMALIZATION_TOL = 1e-9
INV_SQRT2 = 1 / math.sqrt(2)

# sent-state labels and measurement outcomes; "abar"/"bbar" are the orthogonal partners
SENT_LABELS = ("0", "1", "a", "b")
BASIS_OUTCOMES: Dict[str, Tuple[str, str]] = {
    "Z": ("0", "1"),
    "A": ("a", "abar"),
    "B": ("b", "bbar"),
}
OUTCOME_BASIS = {outcome: basis for basis, pair in BASIS_OUTCOMES.items() for outcome in pair}


def complement(outcome: str) -> str:
    first, second = BASIS_OUTCOMES[OUTCOME_BASIS[outcome]]
    return second if outcome == first else first


def sent_states(psi: int) -> Tuple[str, ...]:
    if psi == 3:
        return ("0", "1", "a")
    if psi == 4:
        return ("0", "1", "a", "b")
    raise DomainError(f"psi mode must be 3 or 4, got {psi}")


def measurement_bases(psi: int) -> Tuple[str, ...]:
    return ("Z", "A") if psi == 3 else ("Z", "A", "B")


def _check_probability(key, value: float) -> float:
    value = float(value)
    if not (-NORMALIZATION_TOL <= value <= 1 + NORMALIZATION_TOL) or math.isnan(value):
        raise DomainError(f"probability {key} = {value} outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def _complete_pairs(entries: Dict[tuple, float], partner) -> Dict[tuple, float]:
    """Fill in missing complementary outcomes and check present pairs sum to one."""
    completed = dict(entries)
    for key, value in entries.items():
        other = partner(key)
        if other in entries:
            total = value + entries[other]
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"outcomes {key} and {other} sum to {total:.12g}, expected 1")
        else:
            completed[other] = 1.0 - value
    return completed


@dataclass(frozen=True)
class AttackStats:
    """Conditional probabilities p_{sent,outcome} for a one-way channel.

    Each probability is conditioned on both parties choosing the bases the
    label refers to. A missing complementary outcome is filled in as one
    minus its partner.
    """

    psi: int
    alpha: float
    beta: float
    entries: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.psi not in PSI_MODES:
            raise DomainError(f"psi mode must be 3 or 4, got {self.psi}")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} = {value} outside [0, 1]")
        cleaned: Dict[Tuple[str, str], float] = {}
        for (sent, outcome), value in self.entries.items():
            if sent not in SENT_LABELS or outcome not in OUTCOME_BASIS:
                raise DomainError(f"unknown statistic p_{sent},{outcome}")
            cleaned[(sent, outcome)] = _check_probability((sent, outcome), value)
        completed = _complete_pairs(cleaned, lambda key: (key[0], complement(key[1])))
        object.__setattr__(self, "entries", completed)

    def has(self, sent: str, outcome: str) -> bool:
        return (sent, outcome) in self.entries

    def p(self, sent: str, outcome: str) -> float:
        try:
            return self.entries[(sent, outcome)]
        except KeyError:
            raise IncompleteStatisticsError(f"missing statistic p_{sent},{outcome}") from None

    def require(self, keys: Iterable[Tuple[str, str]]) -> None:
        missing = [f"p_{s},{o}" for s, o in keys if (s, o) not in self.entries]
        if missing:
            raise IncompleteStatisticsError("missing statistics: " + ", ".join(missing))

    def restricted(self, psi: int) -> "AttackStats":
        """Drop every statistic involving states that ``psi`` cannot prepare or measure."""
        allowed_sent = set(sent_states(psi))
        allowed_out = {o for b in measurement_bases(psi) for o in BASIS_OUTCOMES[b]}
        kept = {k: v for k, v in self.entries.items() if k[0] in allowed_sent and k[1] in allowed_out}
        return AttackStats(psi=psi, alpha=self.alpha, beta=self.beta, entries=kept)

    def z_block(self) -> Tuple[float, float, float, float]:
        """(p00, p01, p10, p11)."""
        return (self.p("0", "0"), self.p("0", "1"), self.p("1", "0"), self.p("1", "1"))

    def __iter__(self) -> Iterator[Tuple[Tuple[str, str], float]]:
        return iter(sorted(self.entries.items()))

    @classmethod
    def depolarizing(
        cls, Q: float, psi: int, alpha: float = INV_SQRT2, beta: float = INV_SQRT2
    ) -> "AttackStats":
        """Statistics of rho -> (1-2Q) rho + Q I, without building an attack."""
        if not 0.0 <= Q < 2.0 / 3.0:
            raise DomainError(f"depolarizing parameter Q = {Q} outside [0, 2/3)")
        alpha_bar2 = 1.0 - alpha * alpha
        beta_bar2 = 1.0 - beta * beta
        shrink = 1.0 - 2.0 * Q
        entries = {
            ("0", "0"): 1.0 - Q,
            ("1", "0"): Q,
            ("0", "a"): shrink * alpha * alpha + Q,
            ("1", "a"): shrink * alpha_bar2 + Q,
            ("a", "0"): shrink * alpha * alpha + Q,
            ("a", "abar"): Q,
        }
        if psi == 4:
            entries.update(
                {
                    ("0", "b"): shrink * beta * beta + Q,
                    ("1", "b"): shrink * beta_bar2 + Q,
                    ("b", "0"): shrink * beta * beta + Q,
                    ("b", "bbar"): Q,
                }
            )
        return cls(psi=psi, alpha=alpha, beta=beta, entries=entries)


@dataclass(frozen=True)
class TwoWayStats:
    """Statistics of the two-way (measure-and-resend / reflect) channel.

    ``forward`` holds B's Z-basis outcomes p_{s,i}; ``second`` holds A's
    final outcomes p_{s,i,o} conditioned on sending ``s`` and B observing
    ``i``; ``reflect`` is the one-way statistics of the composed reflect
    channel and ``qa`` its A-basis error rate.
    """

    forward: AttackStats
    second: Dict[Tuple[str, str, str], float]
    reflect: AttackStats
    qa: float

    def __post_init__(self) -> None:
        cleaned: Dict[Tuple[str, str, str], float] = {}
        for (sent, mid, outcome), value in self.second.items():
            if sent not in ("0", "1", "a") or mid not in ("0", "1") or outcome not in OUTCOME_BASIS:
                raise DomainError(f"unknown two-way statistic p_{sent},{mid},{outcome}")
            cleaned[(sent, mid, outcome)] = _check_probability((sent, mid, outcome), value)
        completed = _complete_pairs(cleaned, lambda key: (key[0], key[1], complement(key[2])))
        object.__setattr__(self, "second", completed)
        qa = _check_probability("qa", self.qa)
        object.__setattr__(self, "qa", qa)
        if self.reflect.has("a", "abar") and abs(self.reflect.p("a", "abar") - qa) > NORMALIZATION_TOL:
            raise DomainError("qa disagrees with the reflect-channel p_a,abar")

    @property
    def alpha(self) -> float:
        return self.forward.alpha

    def p_mid(self, sent: str, mid: str) -> float:
        return self.forward.p(sent, mid)

    def p_second(self, sent: str, mid: str, outcome: str) -> Optional[float]:
        """Conditional second-hop probability, or None when it was never observable."""
        return self.second.get((sent, mid, outcome))

    def weighted(self, sent: str, mid: str, outcome: str) -> float:
        """p_{s,i} * p_{s,i,o}; zero-probability mid outcomes contribute nothing."""
        p_mid = self.p_mid(sent, mid)
        if p_mid <= 0.0:
            return 0.0
        value = self.p_second(sent, mid, outcome)
        if value is None:
            raise IncompleteStatisticsError(f"missing statistic p_{sent},{mid},{outcome}")
        return p_mid * value

    @classmethod
    def symmetric(cls, Q: float, qa: float) -> "TwoWayStats":
        """Z-basis flip Q in each direction, unbiased A-basis outcomes and reflect error qa."""
        if not 0.0 <= Q <= 1.0:
            raise DomainError(f"noise level Q = {Q} outside [0, 1]")
        forward = AttackStats(
            psi=3,
            alpha=INV_SQRT2,
            beta=INV_SQRT2,
            entries={("0", "0"): 1.0 - Q, ("1", "0"): Q, ("a", "0"): 0.5},
        )
        second: Dict[Tuple[str, str, str], float] = {}
        for sent in ("0", "1"):
            for mid in ("0", "1"):
                # the reverse channel flips B's resent bit with probability Q
                second[(sent, mid, mid)] = 1.0 - Q
                second[(sent, mid, "a")] = 0.5
        for mid in ("0", "1"):
            second[("a", mid, mid)] = 1.0 - Q
            second[("a", mid, "a")] = 0.5
        reflect = AttackStats.depolarizing(qa, psi=3)
        return cls(forward=forward, second=second, reflect=reflect, qa=qa)

    def joint_key_distribution(self) -> List[float]:
        """P(B=i, A=j) for i, j in {0,1}, with A sending 0 or 1 equally often."""
        return [
            0.5 * sum(self.weighted(x, i, j) for x in ("0", "1"))
            for i in ("0", "1")
            for j in ("0", "1")
        ]
