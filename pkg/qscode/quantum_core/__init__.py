"""
Quantum Core for qscode
Dense state-vector algebra for the handful of qubits the coding protocols need:
pure states, ensembles, unitaries, projective measurement, entropies, fidelity.

Basis ordering is big-endian: |000>, |001>, ..., |111>, leftmost qubit most
significant (qubit index 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..error_handler import (
    DimensionMismatch,
    ImpossibleOutcome,
    InvariantViolation,
    UsageError,
)

ALGEBRA_TOL = 1e-10
PROBABILITY_TOL = 1e-9
IMPOSSIBLE_TOL = 1e-14
ALLOWED_DIMS = (2, 4, 8)


def computational_labels(dim: int) -> Tuple[str, ...]:
    n_qubits = _qubit_count(dim)
    return tuple(''.join(bits) for bits in product('01', repeat=n_qubits))


def _qubit_count(dim: int) -> int:
    if dim not in ALLOWED_DIMS:
        raise InvariantViolation(f"dimension {dim} not in {ALLOWED_DIMS}")
    return dim.bit_length() - 1


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over a labeled computational basis"""

    amps: np.ndarray
    basis_labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise InvariantViolation("amplitudes must be finite")
        labels = tuple(self.basis_labels) or computational_labels(amps.size)
        _qubit_count(amps.size)
        if len(labels) != amps.size:
            raise InvariantViolation("one basis label per amplitude required")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise InvariantViolation(f"state not normalized (norm^2 = {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, 'amps', amps)
        object.__setattr__(self, 'basis_labels', labels)

    @classmethod
    def from_unnormalized(cls, amps: Sequence[complex]) -> 'PureState':
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amps))
        if norm < math.sqrt(IMPOSSIBLE_TOL):
            raise ImpossibleOutcome("cannot normalize a zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def n_qubits(self) -> int:
        return _qubit_count(self.dim)

    def amplitude(self, label: str) -> complex:
        return complex(self.amps[self.basis_labels.index(label)])

    def inner(self, other: 'PureState') -> complex:
        """<self|other>"""
        _check_dims(self.dim, other.dim)
        return complex(np.vdot(self.amps, other.amps))

    def overlap(self, other: 'PureState') -> float:
        return abs(self.inner(other)) ** 2

    def isclose(self, other: 'PureState', tol: float = ALGEBRA_TOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.amps, other.amps, atol=tol, rtol=0))

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self.isclose(other)

    def __repr__(self):
        terms = [f"({a.real:+.4f}{a.imag:+.4f}j)|{lbl}>" for a, lbl in zip(self.amps, self.basis_labels) if abs(a) > 1e-12]
        return "PureState(" + " ".join(terms) + ")"


def basis_state(bits: str) -> PureState:
    """|bits>, e.g. basis_state('011')"""
    dim = 2 ** len(bits)
    amps = np.zeros(dim, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(amps)


class _VacuumFlag:
    """Zero-overlap stand-in for 'no photon in the channel'"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return 'VACUUM'


VACUUM = _VacuumFlag()

Member = Union[PureState, _VacuumFlag]


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of pure states (or the vacuum flag) standing for a density operator"""

    members: Tuple[Tuple[float, Member], ...]

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        if not members:
            raise InvariantViolation("ensemble needs at least one member")
        dims = {s.dim for _, s in members if s is not VACUUM}
        if len(dims) > 1:
            raise DimensionMismatch(f"ensemble members have mixed dimensions {sorted(dims)}")
        for w, s in members:
            if not (-ALGEBRA_TOL <= w <= 1.0 + ALGEBRA_TOL) or not math.isfinite(w):
                raise InvariantViolation(f"ensemble weight {w} outside [0, 1]")
            if s is not VACUUM and not isinstance(s, PureState):
                raise InvariantViolation(f"ensemble member {s!r} is not a PureState")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > ALGEBRA_TOL:
            raise InvariantViolation(f"ensemble weights sum to {total:.12g}, not 1")
        object.__setattr__(self, 'members', members)

    @classmethod
    def pure(cls, state: PureState) -> 'Ensemble':
        return cls(((1.0, state),))

    @property
    def dim(self) -> Optional[int]:
        for _, s in self.members:
            if s is not VACUUM:
                return s.dim
        return None

    @property
    def weights(self) -> Tuple[float, ...]:
        return tuple(w for w, _ in self.members)

    @property
    def vacuum_weight(self) -> float:
        return sum(w for w, s in self.members if s is VACUUM)

    def map_states(self, fn) -> 'Ensemble':
        """Apply fn to every non-flag member, weights unchanged"""
        return Ensemble(tuple((w, s if s is VACUUM else fn(s)) for w, s in self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass(frozen=True)
class UnitaryMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvariantViolation(f"unitary must be square, got shape {m.shape}")
        _qubit_count(m.shape[0])
        if not np.all(np.isfinite(m)):
            raise InvariantViolation("unitary entries must be finite")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=ALGEBRA_TOL, rtol=0):
            raise InvariantViolation("matrix is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, 'entries', m)

    @classmethod
    def from_permutation(cls, mapping: dict, dim: int) -> 'UnitaryMatrix':
        """Permutation unitary; mapping sends basis label -> basis label, identity elsewhere"""
        labels = computational_labels(dim)
        m = np.eye(dim, dtype=complex)
        for src, dst in mapping.items():
            i, j = labels.index(src), labels.index(dst)
            m[:, i] = 0
            m[j, i] = 1
        return cls(m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> 'UnitaryMatrix':
        return UnitaryMatrix(self.entries.conj().T)

    def __matmul__(self, other: 'UnitaryMatrix') -> 'UnitaryMatrix':
        _check_dims(self.dim, other.dim)
        return UnitaryMatrix(self.entries @ other.entries)

    def isclose(self, other: 'UnitaryMatrix', tol: float = ALGEBRA_TOL) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.entries, other.entries, atol=tol, rtol=0))


def identity(dim: int) -> UnitaryMatrix:
    return UnitaryMatrix(np.eye(dim, dtype=complex))


def _check_dims(a: int, b: int):
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def tensor(a: PureState, b: PureState) -> PureState:
    """a (x) b with lexicographic label order"""
    return PureState(np.kron(a.amps, b.amps))


def tensor_all(states: Iterable[PureState]) -> PureState:
    states = list(states)
    if not states:
        raise UsageError("tensor_all needs at least one state")
    result = states[0]
    for s in states[1:]:
        result = tensor(result, s)
    return result


def apply_unitary(u: UnitaryMatrix, s: PureState) -> PureState:
    _check_dims(u.dim, s.dim)
    return PureState(u.entries @ s.amps)


def project_qubit(s: PureState, qubit_index: int, outcome: int) -> Tuple[float, PureState]:
    """Projective measurement of one qubit in the computational basis.

    Returns the outcome probability and the renormalized post-measurement state
    of the remaining qubits (the measured qubit is factored out).
    """
    n = s.n_qubits
    if n < 2:
        raise UsageError("need at least two qubits to factor one out")
    if not 0 <= qubit_index < n:
        raise UsageError(f"qubit index {qubit_index} out of range for {n} qubits")
    if outcome not in (0, 1):
        raise UsageError(f"outcome must be 0 or 1, got {outcome}")

    branch = np.take(s.amps.reshape([2] * n), outcome, axis=qubit_index).reshape(-1)
    probability = float(np.vdot(branch, branch).real)
    if probability < IMPOSSIBLE_TOL:
        raise ImpossibleOutcome(f"outcome {outcome} on qubit {qubit_index} has probability {probability:.3g}")
    return min(probability, 1.0), PureState(branch / math.sqrt(probability))


def shannon_entropy(probs: Sequence[float]) -> float:
    """H = -sum p log2 p in bits, 0 log 0 := 0"""
    p = np.asarray(probs, dtype=float)
    if p.size == 0:
        raise UsageError("empty probability vector")
    if np.any(p < 0):
        raise UsageError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > PROBABILITY_TOL:
        raise UsageError(f"probabilities sum to {p.sum():.12g}, not 1")
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def von_neumann_entropy_letter(alpha_sq: float) -> float:
    """S(rho) of the equiprobable letter ensemble, rho = diag(alpha^2, beta^2)"""
    if not 0.0 <= alpha_sq <= 1.0:
        raise UsageError(f"alpha_sq must lie in [0, 1], got {alpha_sq}")
    return shannon_entropy((alpha_sq, 1.0 - alpha_sq))


def density_matrix(ensemble: Ensemble) -> np.ndarray:
    """sum_i w_i |s_i><s_i| over non-flag members"""
    dim = ensemble.dim
    if dim is None:
        raise UsageError("ensemble holds only the vacuum flag")
    rho = np.zeros((dim, dim), dtype=complex)
    for w, s in ensemble:
        if s is not VACUUM:
            rho += w * np.outer(s.amps, s.amps.conj())
    return rho


def von_neumann_entropy(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    if not np.allclose(rho, rho.conj().T, atol=ALGEBRA_TOL):
        raise InvariantViolation("density matrix must be Hermitian")
    eigenvalues = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    eigenvalues = eigenvalues[eigenvalues > 1e-15]
    return float(max(0.0, -np.sum(eigenvalues * np.log2(eigenvalues))))


def compression_limit(alpha_sq: float, block_size: int = 3) -> float:
    """Asymptotic qubits needed per block of block_size letters"""
    if block_size < 1:
        raise UsageError("block_size must be positive")
    return block_size * von_neumann_entropy_letter(alpha_sq)


def fidelity(target: PureState, achieved: Ensemble) -> float:
    """F = sum_i w_i |<target|member_i>|^2; the vacuum flag contributes zero"""
    f = 0.0
    for w, s in achieved:
        if s is VACUUM:
            continue
        f += w * target.overlap(s)
    return float(min(max(f, 0.0), 1.0))


__all__ = [
    'ALGEBRA_TOL', 'PROBABILITY_TOL', 'IMPOSSIBLE_TOL', 'PureState', 'Ensemble',
    'UnitaryMatrix', 'VACUUM', 'computational_labels', 'basis_state', 'identity', 'tensor',
    'tensor_all', 'apply_unitary', 'project_qubit', 'shannon_entropy',
    'von_neumann_entropy_letter', 'density_matrix', 'von_neumann_entropy',
    'compression_limit', 'fidelity',
]
