"""
Block Coding for qscode
Three-letter block codewords built from non-orthogonal letter states, the
compression unitary U (|100> <-> |011>), encode/decode for the three
protocols and their fidelities, both closed-form and computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Iterator, Tuple

from ..error_handler import UndefinedLetterState, UsageError, get_logger
from ..quantum_core import (
    VACUUM,
    Ensemble,
    PureState,
    UnitaryMatrix,
    apply_unitary,
    basis_state,
    fidelity,
    tensor,
    tensor_all,
)

logger = get_logger('coding')

BLOCK_SIZE = 3


@dataclass(frozen=True)
class SourceParam:
    """Letter-state amplitudes: |psi_+-> = alpha|0> +- beta|1>, alpha, beta >= 0"""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and 0.0 <= alpha <= 1.0):
            raise UsageError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, 'alpha', alpha)

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float) -> 'SourceParam':
        if not (math.isfinite(alpha_sq) and 0.0 <= alpha_sq <= 1.0):
            raise UsageError(f"alpha_sq must lie in [0, 1], got {alpha_sq}")
        return cls(math.sqrt(alpha_sq))

    @property
    def alpha_sq(self) -> float:
        return self.alpha ** 2

    @property
    def beta_sq(self) -> float:
        return max(0.0, 1.0 - self.alpha ** 2)

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta_sq)


class LetterSign(Enum):
    PLUS = '+'
    MINUS = '-'

    def signed_beta(self, param: SourceParam) -> float:
        return param.beta if self is LetterSign.PLUS else -param.beta

    @classmethod
    def parse(cls, symbol: str) -> 'LetterSign':
        try:
            return cls(symbol)
        except ValueError:
            raise UsageError(f"letter sign must be '+' or '-', got {symbol!r}") from None


@dataclass(frozen=True)
class BlockLabel:
    """L = (L1, L2, L3), selects one of the 8 codewords"""

    signs: Tuple[LetterSign, LetterSign, LetterSign]

    def __post_init__(self):
        signs = tuple(self.signs)
        if len(signs) != BLOCK_SIZE or not all(isinstance(s, LetterSign) for s in signs):
            raise UsageError(f"a block label is {BLOCK_SIZE} letter signs, got {self.signs!r}")
        object.__setattr__(self, 'signs', signs)

    @classmethod
    def parse(cls, text: str) -> 'BlockLabel':
        return cls(tuple(LetterSign.parse(ch) for ch in text))

    @property
    def index(self) -> int:
        """Position in the fixed +++ ... --- ordering"""
        return int(''.join('0' if s is LetterSign.PLUS else '1' for s in self.signs), 2)

    def signed_betas(self, param: SourceParam) -> Tuple[float, float, float]:
        return tuple(s.signed_beta(param) for s in self.signs)

    def __str__(self):
        return ''.join(s.value for s in self.signs)


ALL_LABELS: Tuple[BlockLabel, ...] = tuple(
    BlockLabel(signs) for signs in product((LetterSign.PLUS, LetterSign.MINUS), repeat=BLOCK_SIZE)
)


def all_labels() -> Iterator[BlockLabel]:
    """+++, ++-, +-+, +--, -++, -+-, --+, ---"""
    return iter(ALL_LABELS)


class Protocol(Enum):
    P1 = 'P1'  # discard on failure
    P2 = 'P2'  # substitute |00> on failure
    P3 = 'P3'  # drop every third letter

    @classmethod
    def parse(cls, text: str) -> 'Protocol':
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise UsageError(f"unknown protocol {text!r}; expected P1, P2 or P3") from None


@dataclass(frozen=True)
class EncodeResult:
    channel: Ensemble
    success_prob: float


def success_probability(param: SourceParam) -> float:
    """p = alpha^4 (1 + 2 beta^2), probability that the first qubit reads 0"""
    return param.alpha_sq ** 2 * (1.0 + 2.0 * param.beta_sq)


def failure_probability(param: SourceParam) -> float:
    return param.beta_sq ** 2 * (1.0 + 2.0 * param.alpha_sq)


def letter_state(param: SourceParam, sign: LetterSign) -> PureState:
    return PureState((param.alpha, sign.signed_beta(param)))


def letter_ensemble(param: SourceParam) -> Ensemble:
    """The two letter states with equal weight"""
    return Ensemble(tuple((0.5, letter_state(param, s)) for s in LetterSign))


def block_state(param: SourceParam, label: BlockLabel) -> PureState:
    """|B_L> = |psi_L1> (x) |psi_L2> (x) |psi_L3>"""
    return tensor_all(letter_state(param, s) for s in label.signs)


_CODING_UNITARY = UnitaryMatrix.from_permutation({'100': '011', '011': '100'}, 8)


def coding_unitary() -> UnitaryMatrix:
    """Swap of |100> and |011>, identity on the other basis states (self-inverse)"""
    return _CODING_UNITARY


def mu_state(param: SourceParam, label: BlockLabel) -> PureState:
    """Channel state kept when the first qubit of U|B_L> reads 0"""
    b1, b2, b3 = label.signed_betas(param)
    norm = math.sqrt(1.0 + 2.0 * param.beta_sq)
    # |00>, |01>, |10>, |11>
    return PureState((param.alpha / norm, b3 / norm, b2 / norm, b1 / norm))


def nu_state(param: SourceParam, label: BlockLabel) -> PureState:
    """Remaining two qubits when the first qubit of U|B_L> reads 1"""
    if param.beta_sq <= 0.0:
        raise UndefinedLetterState("nu_L is undefined at beta = 0 (its branch has zero weight)")
    b1, b2, b3 = label.signed_betas(param)
    a = param.alpha
    norm = param.beta_sq * math.sqrt(1.0 + 2.0 * param.alpha_sq)
    return PureState((a * b2 * b3 / norm, a * b1 * b3 / norm, a * b1 * b2 / norm, b1 * b2 * b3 / norm))


def encode(param: SourceParam, label: BlockLabel, protocol: Protocol) -> EncodeResult:
    """Compress |B_L> into a two-qubit channel (P1 or P2)"""
    if protocol is Protocol.P3:
        raise UsageError("P3 does not go through the coding unitary; use encode_p3")
    p = success_probability(param)
    mu = mu_state(param, label)
    if protocol is Protocol.P1:
        failure = VACUUM
    else:
        failure = basis_state('00')
    channel = Ensemble(((p, mu), (1.0 - p, failure)))
    logger.debug(f"encoded {label} with {protocol.value}: success probability {p:.6f}")
    return EncodeResult(channel=channel, success_prob=p)


def decode(channel: Ensemble) -> Ensemble:
    """Bob's side: append |0> in front and apply U^dagger"""
    if channel.dim not in (None, 4):
        raise UsageError(f"decode expects a two-qubit channel, got dimension {channel.dim}")
    u_dag = coding_unitary().dagger()
    zero = basis_state('0')
    return channel.map_states(lambda s: apply_unitary(u_dag, tensor(zero, s)))


def encode_p3(param: SourceParam, label: BlockLabel) -> Tuple[PureState, PureState]:
    """Keep the first two letters; Bob substitutes |0> for the third"""
    first, second, _ = (letter_state(param, s) for s in label.signs)
    channel = tensor(first, second)
    reconstructed = tensor(channel, basis_state('0'))
    return channel, reconstructed


def analytic_fidelity(param: SourceParam, protocol: Protocol) -> float:
    a2, b2 = param.alpha_sq, param.beta_sq
    if protocol is Protocol.P1:
        return a2 ** 4 * (1.0 + 2.0 * b2) ** 2
    if protocol is Protocol.P2:
        return a2 ** 4 * (1.0 + 2.0 * b2) ** 2 + a2 ** 3 * b2 ** 2 * (1.0 + 2.0 * a2)
    return a2


def per_label_fidelity(param: SourceParam, label: BlockLabel, protocol: Protocol) -> float:
    target = block_state(param, label)
    if protocol is Protocol.P3:
        _, reconstructed = encode_p3(param, label)
        return fidelity(target, Ensemble.pure(reconstructed))
    return fidelity(target, decode(encode(param, label, protocol).channel))


def numeric_fidelity(param: SourceParam, protocol: Protocol) -> float:
    """Average over the 8 equally likely codewords of the full encode/decode pipeline"""
    return sum(per_label_fidelity(param, label, protocol) for label in ALL_LABELS) / len(ALL_LABELS)


def crossover_alpha_sq(tol: float = 1e-12) -> float:
    """alpha^2 in (0, 1) above which P1 beats dropping every third letter"""

    def gap(alpha_sq: float) -> float:
        param = SourceParam.from_alpha_sq(alpha_sq)
        return analytic_fidelity(param, Protocol.P1) - analytic_fidelity(param, Protocol.P3)

    lo, hi = 0.5, 0.99
    if gap(lo) >= 0 or gap(hi) <= 0:
        raise UsageError("no sign change of F1 - F3 on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


__all__ = [
    'BLOCK_SIZE', 'SourceParam', 'LetterSign', 'BlockLabel', 'ALL_LABELS', 'all_labels',
    'Protocol', 'EncodeResult', 'success_probability', 'failure_probability',
    'letter_state', 'letter_ensemble', 'block_state', 'coding_unitary', 'mu_state',
    'nu_state', 'encode', 'decode', 'encode_p3', 'analytic_fidelity',
    'per_label_fidelity', 'numeric_fidelity', 'crossover_alpha_sq',
]
