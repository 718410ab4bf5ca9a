"""Eve's collective attack models and exact simulation of the observable statistics.

Vectors on (qubit ⊗ ancilla) are qubit-major: index ``i * d + m`` for qubit
basis state ``i`` and ancilla basis state ``m``. The ancilla start state is
the first ancilla basis vector, so an attack unitary is pinned down by its
columns ``0`` and ``d``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from .errors import DomainError
from .stats import (
    BASIS_OUTCOMES,
    INV_SQRT2,
    AttackStats,
    TwoWayStats,
    measurement_bases,
    sent_states,
)

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-9
DEFAULT_ANCILLA_DIM = 4
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class BasisConfig:
    """The two non-orthogonal bases used for mismatched parameter estimation.

    |a> = alpha|0> + abar|1>, |abar> = abar|0> - alpha|1>,
    |b> = beta|0> + i bbar|1>, |bbar> = bbar|0> - i beta|1>.
    """

    alpha: float = INV_SQRT2
    beta: float = INV_SQRT2

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} = {value} outside [0, 1]")

    @property
    def alpha_bar(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.alpha**2))

    @property
    def beta_bar(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.beta**2))

    def ket(self, label: str) -> np.ndarray:
        a, ab, b, bb = self.alpha, self.alpha_bar, self.beta, self.beta_bar
        kets = {
            "0": (1.0, 0.0),
            "1": (0.0, 1.0),
            "a": (a, ab),
            "abar": (ab, -a),
            "b": (b, 1j * bb),
            "bbar": (bb, -1j * b),
        }
        try:
            return np.array(kets[label], dtype=complex)
        except KeyError:
            raise DomainError(f"unknown basis state '{label}'") from None


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n×n unitary: QR of a complex Gaussian with phase-fixed R."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def complete_unitary(columns: Mapping[int, np.ndarray], dim: int) -> np.ndarray:
    """Place orthonormal ``columns`` at their indices and fill the rest orthonormally."""
    known = sorted(columns)
    basis = np.column_stack([np.asarray(columns[k], dtype=complex) for k in known])
    if basis.shape[0] != dim:
        raise DomainError(f"column length {basis.shape[0]} does not match dimension {dim}")
    overlap = basis.conj().T @ basis
    if np.max(np.abs(overlap - np.eye(len(known))), initial=0.0) > UNITARY_TOL:
        raise DomainError("given columns are not orthonormal")
    rest = linalg.null_space(basis.conj().T)
    unitary = np.zeros((dim, dim), dtype=complex)
    free = iter(rest.T)
    for index in range(dim):
        unitary[:, index] = columns[index] if index in columns else next(free)
    return unitary


def _is_unitary(u: np.ndarray) -> bool:
    return u.ndim == 2 and u.shape[0] == u.shape[1] and bool(
        np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) <= UNITARY_TOL
    )


class OneWayAttack:
    """Eve's forward unitary, described by U|0,chi> = |0,e0> + |1,e1> and U|1,chi> = |0,e2> + |1,e3>."""

    def __init__(self, e0, e1, e2, e3) -> None:
        vectors = [np.asarray(v, dtype=complex).ravel() for v in (e0, e1, e2, e3)]
        dims = {v.size for v in vectors}
        if len(dims) != 1 or 0 in dims:
            raise DomainError(f"ancilla vectors must share one positive length, got {sorted(dims)}")
        self._e = np.vstack(vectors)
        self._e.setflags(write=False)
        g = self.gram()
        if abs(g[0, 0].real + g[1, 1].real - 1.0) > UNITARY_TOL:
            raise DomainError("<e0|e0> + <e1|e1> must equal 1")
        if abs(g[2, 2].real + g[3, 3].real - 1.0) > UNITARY_TOL:
            raise DomainError("<e2|e2> + <e3|e3> must equal 1")
        if abs(g[0, 2] + g[1, 3]) > UNITARY_TOL:
            raise DomainError("<e0|e2> + <e1|e3> must equal 0")

    @property
    def ancilla_dim(self) -> int:
        return self._e.shape[1]

    @property
    def vectors(self) -> np.ndarray:
        """The 4×d array whose rows are e0..e3."""
        return self._e

    def e(self, index: int) -> np.ndarray:
        return self._e[index]

    def gram(self) -> np.ndarray:
        """G[i, j] = <e_i|e_j>."""
        return self._e.conj() @ self._e.T

    def column(self, qubit: int) -> np.ndarray:
        """U|qubit, chi> as a 2d vector."""
        if qubit == 0:
            return np.concatenate([self._e[0], self._e[1]])
        return np.concatenate([self._e[2], self._e[3]])

    def unitary(self) -> np.ndarray:
        d = self.ancilla_dim
        return complete_unitary({0: self.column(0), d: self.column(1)}, 2 * d)

    def apply(self, qubit_state: Sequence[complex]) -> np.ndarray:
        s = np.asarray(qubit_state, dtype=complex)
        return s[0] * self.column(0) + s[1] * self.column(1)

    def __repr__(self) -> str:
        return f"OneWayAttack(ancilla_dim={self.ancilla_dim})"


def identity_attack(ancilla_dim: int = 1) -> OneWayAttack:
    chi = np.zeros(ancilla_dim, dtype=complex)
    chi[0] = 1.0
    zero = np.zeros(ancilla_dim, dtype=complex)
    return OneWayAttack(chi, zero, zero, chi)


def kraus_attack(kraus: Sequence[np.ndarray]) -> OneWayAttack:
    """Stinespring dilation U|psi,chi> = sum_k K_k|psi> ⊗ |k>."""
    ops = np.array([np.asarray(k, dtype=complex) for k in kraus])
    if ops.ndim != 3 or ops.shape[1:] != (2, 2):
        raise DomainError("Kraus operators must be 2x2 matrices")
    completeness = np.einsum("kji,kjl->il", ops.conj(), ops)
    if np.max(np.abs(completeness - np.eye(2))) > UNITARY_TOL:
        raise DomainError("Kraus operators do not sum to the identity")
    return OneWayAttack(ops[:, 0, 0], ops[:, 1, 0], ops[:, 0, 1], ops[:, 1, 1])


def depolarizing_kraus(Q: float) -> List[np.ndarray]:
    if not 0.0 <= Q < 2.0 / 3.0:
        raise DomainError(f"depolarizing parameter Q = {Q} outside [0, 2/3)")
    weights = {"I": 1.0 - 1.5 * Q, "X": Q / 2, "Y": Q / 2, "Z": Q / 2}
    return [math.sqrt(w) * PAULI[name] for name, w in weights.items()]


def depolarizing_attack(Q: float) -> OneWayAttack:
    """Attack inducing rho -> (1-2Q) rho + Q I with a 4-dimensional ancilla."""
    return kraus_attack(depolarizing_kraus(Q))


def rotation_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation_attack(theta: float, Q: float = 0.0) -> OneWayAttack:
    """R_y(theta) followed by depolarizing noise Q."""
    rot = rotation_y(theta)
    return kraus_attack([k @ rot for k in depolarizing_kraus(Q)])


def random_attack(seed: int, ancilla_dim: int = DEFAULT_ANCILLA_DIM) -> OneWayAttack:
    """Two columns of a Haar-random unitary on qubit ⊗ C^d."""
    if ancilla_dim < 2:
        raise DomainError(f"ancilla dimension must be at least 2, got {ancilla_dim}")
    rng = np.random.default_rng(seed)
    u = haar_unitary(2 * ancilla_dim, rng)
    return _from_unitary(u, ancilla_dim)


def drift_attack(
    seed: int, angle: float, coupling: float = 0.05, Q: float = 0.0, ancilla_dim: int = 2
) -> OneWayAttack:
    """Seeded near-unitary channel: exp(-i (angle/2 n.sigma ⊗ I + coupling H)) then depolarizing Q.

    ``n`` is a random Bloch axis and ``H`` a random Hermitian on qubit ⊗ C^d
    with unit spectral norm. ``angle = 0`` with a small coupling stays close
    to the identity.
    """
    if coupling < 0.0:
        raise DomainError(f"coupling = {coupling} must be non-negative")
    if ancilla_dim < 1:
        raise DomainError(f"ancilla dimension must be positive, got {ancilla_dim}")
    rng = np.random.default_rng(seed)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    spin = axis[0] * PAULI["X"] + axis[1] * PAULI["Y"] + axis[2] * PAULI["Z"]
    n = 2 * ancilla_dim
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (z + z.conj().T) / 2.0
    h /= np.linalg.norm(h, 2)
    generator = 0.5 * angle * np.kron(spin, np.eye(ancilla_dim)) + coupling * h
    u = linalg.expm(-1j * generator)
    # K_m[i, k] = <i, m| U |k, chi>
    channel = [u[m::ancilla_dim, ::ancilla_dim] for m in range(ancilla_dim)]
    if Q != 0.0:
        channel = [d @ k for d in depolarizing_kraus(Q) for k in channel]
    logger.debug("[Attack] Drift seed %d axis %s", seed, np.round(axis, 4))
    return kraus_attack(channel)


def _from_unitary(u: np.ndarray, d: int) -> OneWayAttack:
    return OneWayAttack(u[:d, 0], u[d:, 0], u[:d, d], u[d:, d])


def f_states(attack: OneWayAttack, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ancilla components of U|a> along |a> (f0) and |abar> (f1)."""
    a = alpha
    ab = math.sqrt(max(0.0, 1.0 - a * a))
    e0, e1, e2, e3 = attack.vectors
    f0 = a * a * e0 + a * ab * e2 + a * ab * e1 + ab * ab * e3
    f1 = ab * a * e0 + ab * ab * e2 - a * a * e1 - a * ab * e3
    return f0, f1


def _outcome_probability(output: np.ndarray, outcome_ket: np.ndarray, d: int) -> float:
    amplitude = np.conj(outcome_ket[0]) * output[:d] + np.conj(outcome_ket[1]) * output[d:]
    return float(np.vdot(amplitude, amplitude).real)


def simulate_stats(attack: OneWayAttack, cfg: BasisConfig, psi: int) -> AttackStats:
    """Exact conditional probabilities for every sent state in Psi and every measured basis."""
    if not 0.0 < cfg.alpha < 1.0:
        logger.warning("[Simulate] alpha = %g makes the A basis coincide with Z; stats are uninformative", cfg.alpha)
    if psi == 4 and not 0.0 < cfg.beta < 1.0:
        logger.warning("[Simulate] beta = %g makes the B basis coincide with Z; stats are uninformative", cfg.beta)
    d = attack.ancilla_dim
    entries: Dict[Tuple[str, str], float] = {}
    for sent in sent_states(psi):
        output = attack.apply(cfg.ket(sent))
        for basis in measurement_bases(psi):
            first, second = BASIS_OUTCOMES[basis]
            p_first = min(max(_outcome_probability(output, cfg.ket(first), d), 0.0), 1.0)
            entries[(sent, first)] = p_first
            entries[(sent, second)] = 1.0 - p_first
    return AttackStats(psi=psi, alpha=cfg.alpha, beta=cfg.beta, entries=entries)


def simulate_stats_sampled(
    attack: OneWayAttack, cfg: BasisConfig, psi: int, samples: int, seed: int
) -> AttackStats:
    """Binomial sample of the exact statistics with ``samples`` rounds per (sent, basis) cell."""
    if samples < 1:
        raise DomainError(f"sample count must be at least 1, got {samples}")
    exact = simulate_stats(attack, cfg, psi)
    rng = np.random.default_rng(seed)
    entries: Dict[Tuple[str, str], float] = {}
    for sent in sent_states(psi):
        for basis in measurement_bases(psi):
            first, second = BASIS_OUTCOMES[basis]
            hits = int(rng.binomial(samples, exact.p(sent, first)))
            entries[(sent, first)] = hits / samples
            entries[(sent, second)] = (samples - hits) / samples
    logger.debug("[Simulate] Sampled %d rounds per cell with seed %d", samples, seed)
    return AttackStats(psi=psi, alpha=cfg.alpha, beta=cfg.beta, entries=entries)


class TwoWayAttack:
    """Forward attack U_F and reverse attack U_R for the reflect / measure-and-resend channel.

    U_R|i, e_j> = |0, e_{i,j}^0> + |1, e_{i,j}^1>.
    """

    def __init__(self, forward: OneWayAttack, reverse_unitary: np.ndarray) -> None:
        reverse = np.asarray(reverse_unitary, dtype=complex)
        d = forward.ancilla_dim
        if reverse.shape != (2 * d, 2 * d):
            raise DomainError(f"reverse unitary must be {2 * d}x{2 * d}, got {reverse.shape}")
        if not _is_unitary(reverse):
            raise DomainError("reverse operator is not unitary")
        self.forward = forward
        self.reverse_unitary = reverse
        self._second = self._second_hop_vectors()

    @property
    def ancilla_dim(self) -> int:
        return self.forward.ancilla_dim

    def _second_hop_vectors(self) -> np.ndarray:
        d = self.ancilla_dim
        out = np.zeros((2, 4, 2, d), dtype=complex)
        for i in range(2):
            for j in range(4):
                state = np.zeros(2 * d, dtype=complex)
                state[i * d : (i + 1) * d] = self.forward.e(j)
                v = self.reverse_unitary @ state
                out[i, j, 0] = v[:d]
                out[i, j, 1] = v[d:]
        return out

    def e(self, i: int, j: int, k: int) -> np.ndarray:
        """e_{i,j}^k."""
        return self._second[i, j, k]

    def g_vectors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Ancilla vectors of the reflect channel V = U_R U_F."""
        e = self.e
        return (
            e(0, 0, 0) + e(1, 1, 0),
            e(0, 0, 1) + e(1, 1, 1),
            e(0, 2, 0) + e(1, 3, 0),
            e(0, 2, 1) + e(1, 3, 1),
        )

    def composed(self) -> OneWayAttack:
        return OneWayAttack(*self.g_vectors())

    @classmethod
    def with_identity_reverse(cls, forward: OneWayAttack) -> "TwoWayAttack":
        return cls(forward, np.eye(2 * forward.ancilla_dim, dtype=complex))

    def __repr__(self) -> str:
        return f"TwoWayAttack(ancilla_dim={self.ancilla_dim})"


def random_two_way_attack(seed: int, ancilla_dim: int = DEFAULT_ANCILLA_DIM) -> TwoWayAttack:
    if ancilla_dim < 2:
        raise DomainError(f"ancilla dimension must be at least 2, got {ancilla_dim}")
    rng = np.random.default_rng(seed)
    forward = _from_unitary(haar_unitary(2 * ancilla_dim, rng), ancilla_dim)
    return TwoWayAttack(forward, haar_unitary(2 * ancilla_dim, rng))


def depolarizing_two_way_attack(Q: float) -> TwoWayAttack:
    """Independent depolarizing channels Q each way, each dilated into its own 4-dim register."""
    kraus = depolarizing_kraus(Q)
    reg = len(kraus)
    d = reg * reg
    first = depolarizing_attack(Q)
    # forward register holds the first dilation, second register starts at |0>
    forward = OneWayAttack(*[np.kron(first.e(j), np.eye(reg)[0]) for j in range(4)])

    columns: Dict[int, np.ndarray] = {}
    for qubit in range(2):
        for m in range(reg):
            out = np.zeros(2 * d, dtype=complex)
            for k, op in enumerate(kraus):
                out += np.kron(op[:, qubit], np.kron(np.eye(reg)[m], np.eye(reg)[k]))
            columns[qubit * d + m * reg] = out
    return TwoWayAttack(forward, complete_unitary(columns, 2 * d))


def simulate_two_way_stats(attack: TwoWayAttack, cfg: Optional[BasisConfig] = None) -> TwoWayStats:
    """Exact forward, second-hop and reflect statistics of a two-way attack."""
    cfg = cfg or BasisConfig()
    forward = simulate_stats(attack.forward, cfg, psi=3)
    forward_z = AttackStats(
        psi=3,
        alpha=cfg.alpha,
        beta=cfg.beta,
        entries={k: v for k, v in forward.entries.items() if k[1] in ("0", "1")},
    )

    d = attack.ancilla_dim
    second: Dict[Tuple[str, str, str], float] = {}
    for sent in ("0", "1", "a"):
        output = attack.forward.apply(cfg.ket(sent))
        for i, mid in enumerate(("0", "1")):
            ancilla = output[i * d : (i + 1) * d]
            weight = float(np.vdot(ancilla, ancilla).real)
            if weight <= 0.0:
                continue
            resent = np.zeros(2 * d, dtype=complex)
            resent[i * d : (i + 1) * d] = ancilla / math.sqrt(weight)
            final = attack.reverse_unitary @ resent
            for outcome in ("0", "a"):
                second[(sent, mid, outcome)] = min(max(_outcome_probability(final, cfg.ket(outcome), d), 0.0), 1.0)

    reflect = simulate_stats(attack.composed(), cfg, psi=3)
    return TwoWayStats(forward=forward_z, second=second, reflect=reflect, qa=reflect.p("a", "abar"))
