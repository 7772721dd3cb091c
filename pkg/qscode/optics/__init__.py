"""
Linear Optics for qscode
Single-photon mode model of the coding circuit: one photon carries three
qubits as path (A, B, C, D = first two qubits 00, 01, 10, 11) and
polarization (H = 0, V = 1). Half-wave plates and polarizing beam splitters
act on (path, polarization) amplitudes; the decoder and the fidelity test are
the exact mirror image (inverse) of the forward stages.

Detector ports
--------------
Coding stage: path C -> D1, path D -> D2 (first qubit measured as 1).
Fidelity test, at the mirror image of the input plane: (A,H) -> D0 'yes',
path B -> D3, path D -> D4, path C -> D5, (A,V) -> D6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..coding import ALL_LABELS, BlockLabel, Protocol, SourceParam
from ..error_handler import InvariantViolation, UsageError, get_logger
from ..quantum_core import ALGEBRA_TOL, IMPOSSIBLE_TOL, PureState

logger = get_logger('optics')

PATHS = ('A', 'B', 'C', 'D')
POLARIZATIONS = ('H', 'V')
N_MODES = len(PATHS) * len(POLARIZATIONS)
QUARTER_TURN = math.pi / 4  # 45 deg plate: H <-> V

DETECTORS = ('D0', 'D1', 'D2', 'D3', 'D4', 'D5', 'D6')


def mode_index(path: str, pol: str) -> int:
    """Flat index; (A,H) -> 0 = |000>, ..., (D,V) -> 7 = |111>"""
    return PATHS.index(path) * 2 + POLARIZATIONS.index(pol)


def _check_path(path: str):
    if path not in PATHS:
        raise UsageError(f"unknown path {path!r}; expected one of {PATHS}")


@dataclass(frozen=True)
class OpticalState:
    """Amplitude table over (path, polarization), shape (4, 2)"""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(len(PATHS), len(POLARIZATIONS))
        if not np.all(np.isfinite(amps)):
            raise InvariantViolation("optical amplitudes must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise InvariantViolation(f"optical state not normalized (norm^2 = {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, 'amps', amps)

    @classmethod
    def photon(cls, path: str = 'A', pol: str = 'H') -> 'OpticalState':
        amps = np.zeros(N_MODES, dtype=complex)
        amps[mode_index(path, pol)] = 1.0
        return cls(amps)

    @classmethod
    def from_pure_state(cls, state: PureState) -> 'OpticalState':
        if state.dim != N_MODES:
            raise UsageError(f"only 3-qubit states map onto the optical modes, got dimension {state.dim}")
        return cls(state.amps)

    def to_pure_state(self) -> PureState:
        return PureState(self.amps.reshape(-1))

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def path_probability(self, path: str) -> float:
        return float(np.sum(np.abs(self.amps[PATHS.index(path)]) ** 2))

    def amplitude(self, path: str, pol: str) -> complex:
        return complex(self.amps[PATHS.index(path), POLARIZATIONS.index(pol)])


@dataclass(frozen=True)
class WavePlate:
    """Half-wave plate with fast axis at theta to the vertical, on one path"""

    theta: float
    acts_on: str

    def __post_init__(self):
        _check_path(self.acts_on)
        if not math.isfinite(self.theta):
            raise UsageError("wave plate angle must be finite")

    def jones(self) -> np.ndarray:
        c, s = math.cos(2 * self.theta), math.sin(2 * self.theta)
        return np.array([[c, s], [s, -c]], dtype=complex)

    def matrix(self) -> np.ndarray:
        m = np.eye(N_MODES, dtype=complex)
        i = mode_index(self.acts_on, 'H')
        m[i:i + 2, i:i + 2] = self.jones()
        return m

    def inverse(self) -> 'WavePlate':
        return self

    def dump(self) -> str:
        return f"hwp {self.acts_on} {self.theta!r}"


@dataclass(frozen=True)
class PolarizingBeamSplitter:
    """Transmits H, reflects V.

    Input ports (p, q) feed output ports (r, s): p_H -> r_H, p_V -> s_V,
    q_H -> s_H, q_V -> r_V. Reflection phase is +1.
    """

    in_paths: Tuple[str, str]
    out_paths: Tuple[str, str]

    def __post_init__(self):
        in_paths, out_paths = tuple(self.in_paths), tuple(self.out_paths)
        for p in in_paths + out_paths:
            _check_path(p)
        if len(in_paths) != 2 or len(out_paths) != 2 or in_paths[0] == in_paths[1]:
            raise UsageError(f"a PBS joins two distinct paths, got {in_paths} -> {out_paths}")
        if set(in_paths) != set(out_paths):
            raise UsageError("PBS output ports must reuse the input path labels")
        object.__setattr__(self, 'in_paths', in_paths)
        object.__setattr__(self, 'out_paths', out_paths)

    def matrix(self) -> np.ndarray:
        (p, q), (r, s) = self.in_paths, self.out_paths
        routes = {
            (p, 'H'): (r, 'H'),
            (p, 'V'): (s, 'V'),
            (q, 'H'): (s, 'H'),
            (q, 'V'): (r, 'V'),
        }
        m = np.eye(N_MODES, dtype=complex)
        for src in routes:
            m[:, mode_index(*src)] = 0
        for src, dst in routes.items():
            m[mode_index(*dst), mode_index(*src)] = 1
        return m

    def inverse(self) -> 'PolarizingBeamSplitter':
        return PolarizingBeamSplitter(self.out_paths, self.in_paths)

    def dump(self) -> str:
        return f"pbs {','.join(self.in_paths)} {','.join(self.out_paths)}"


Element = Union[WavePlate, PolarizingBeamSplitter]


@dataclass(frozen=True)
class Circuit:
    """Ordered optical elements, applied first to last"""

    elements: Tuple[Element, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'elements', tuple(self.elements))

    def unitary(self) -> np.ndarray:
        m = np.eye(N_MODES, dtype=complex)
        for element in self.elements:
            m = element.matrix() @ m
        return m

    def apply(self, state: OpticalState) -> OpticalState:
        return OpticalState(self.unitary() @ state.vector)

    def inverse(self) -> 'Circuit':
        return Circuit(tuple(e.inverse() for e in reversed(self.elements)))

    def __add__(self, other: 'Circuit') -> 'Circuit':
        return Circuit(self.elements + other.elements)

    def __len__(self):
        return len(self.elements)

    def dump(self) -> str:
        """One element per line: 'hwp <path> <theta>' or 'pbs <in1>,<in2> <out1>,<out2>'"""
        return ''.join(e.dump() + '\n' for e in self.elements)

    @classmethod
    def parse(cls, text: str) -> 'Circuit':
        elements = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == 'hwp' and len(parts) == 3:
                    elements.append(WavePlate(theta=float(parts[2]), acts_on=parts[1]))
                elif parts[0] == 'pbs' and len(parts) == 3:
                    elements.append(PolarizingBeamSplitter(tuple(parts[1].split(',')), tuple(parts[2].split(','))))
                else:
                    raise ValueError(f"unrecognised element {parts[0]!r}")
            except (ValueError, UsageError) as exc:
                raise UsageError(f"circuit dump line {lineno}: {exc}") from exc
        return cls(tuple(elements))


@dataclass(frozen=True)
class SevenOutcome:
    """Probabilities of D0 ('yes') and D1..D6"""

    probs: Tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != len(DETECTORS):
            raise InvariantViolation(f"expected {len(DETECTORS)} outcome probabilities, got {len(probs)}")
        if any(p < -ALGEBRA_TOL for p in probs):
            raise InvariantViolation(f"negative outcome probability in {probs}")
        object.__setattr__(self, 'probs', tuple(max(p, 0.0) for p in probs))

    @property
    def d0_yes(self) -> float:
        return self.probs[0]

    @property
    def failure(self) -> float:
        """D1 + D2: coding-stage failures"""
        return self.probs[1] + self.probs[2]

    @property
    def rejected(self) -> float:
        """D3 .. D6: 'no' answers of the fidelity test"""
        return sum(self.probs[3:])

    @property
    def total(self) -> float:
        return sum(self.probs)

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)

    def __getitem__(self, detector: Union[int, str]) -> float:
        if isinstance(detector, str):
            detector = DETECTORS.index(detector)
        return self.probs[detector]


def theta_for_letter(beta_signed: float) -> float:
    """theta_n = 1/2 arcsin(beta_Ln): the plate turns H into alpha H + beta_Ln V"""
    if abs(beta_signed) > 1.0 + ALGEBRA_TOL:
        raise UsageError(f"|beta| must not exceed 1, got {beta_signed}")
    return 0.5 * math.asin(max(-1.0, min(1.0, beta_signed)))


def preparation_stages(param: SourceParam, label: BlockLabel) -> Tuple[Circuit, Circuit, Circuit]:
    """Lines 0-1 (first path qubit), 1-2 (second path qubit), 2-3 (polarization qubit)"""
    t1, t2, t3 = (theta_for_letter(b) for b in label.signed_betas(param))
    first = Circuit((
        WavePlate(t1, 'A'),
        PolarizingBeamSplitter(('A', 'C'), ('A', 'C')),
        WavePlate(QUARTER_TURN, 'C'),
    ))
    second = Circuit((
        WavePlate(t2, 'A'),
        WavePlate(t2, 'C'),
        PolarizingBeamSplitter(('A', 'B'), ('A', 'B')),
        PolarizingBeamSplitter(('C', 'D'), ('C', 'D')),
        WavePlate(QUARTER_TURN, 'B'),
        WavePlate(QUARTER_TURN, 'D'),
    ))
    third = Circuit(tuple(WavePlate(t3, path) for path in PATHS))
    return first, second, third


def preparation_circuit(param: SourceParam, label: BlockLabel) -> Circuit:
    first, second, third = preparation_stages(param, label)
    return first + second + third


def coding_circuit() -> Circuit:
    """(C,H) <-> (B,V), i.e. |100> <-> |011>: 45 deg plate on C, PBS(B,C), 45 deg plate on C"""
    return Circuit((
        WavePlate(QUARTER_TURN, 'C'),
        PolarizingBeamSplitter(('B', 'C'), ('B', 'C')),
        WavePlate(QUARTER_TURN, 'C'),
    ))


def prep_stage(param: SourceParam, label: BlockLabel) -> OpticalState:
    """Horizontally polarized photon entering at E, prepared as |B_L>"""
    return preparation_circuit(param, label).apply(OpticalState.photon('A', 'H'))


@dataclass(frozen=True)
class CodingOutcome:
    channel: Optional[OpticalState]
    d1: float
    d2: float

    @property
    def success_prob(self) -> float:
        return max(0.0, 1.0 - self.d1 - self.d2)

    def __iter__(self):
        return iter((self.channel, (self.d1, self.d2)))


def split_coded(state: OpticalState) -> Tuple[np.ndarray, float, float]:
    """Apply U and split off paths C/D.

    Returns the unnormalized A/B amplitudes as a flat mode vector together
    with the D1 (path C) and D2 (path D) probabilities.
    """
    coded = coding_circuit().apply(state)
    d1 = coded.path_probability('C')
    d2 = coded.path_probability('D')
    kept = np.array(coded.amps)
    kept[PATHS.index('C')] = 0
    kept[PATHS.index('D')] = 0
    return kept.reshape(-1), d1, d2


def coding_stage(state: OpticalState) -> CodingOutcome:
    """Apply U, then let D1 (path C) and D2 (path D) measure the first qubit.

    The channel is the renormalized A/B part, or None when the photon is
    certain to reach D1/D2.
    """
    kept, d1, d2 = split_coded(state)
    weight = float(np.sum(np.abs(kept) ** 2))
    channel = None
    if weight >= IMPOSSIBLE_TOL:
        channel = OpticalState(kept / math.sqrt(weight))
    logger.debug(f"coding stage: d1={d1:.6f} d2={d2:.6f} kept={weight:.6f}")
    return CodingOutcome(channel=channel, d1=d1, d2=d2)


def channel_support_ok(state: OpticalState) -> bool:
    return state.path_probability('C') + state.path_probability('D') <= ALGEBRA_TOL


def decode_stage(channel: OpticalState) -> OpticalState:
    """Mirror image of the coding section (no detectors); the idle first qubit is |0>"""
    if not channel_support_ok(channel):
        raise UsageError("decode_stage expects a channel supported on paths A and B only")
    return coding_circuit().inverse().apply(channel)


def detector_probabilities(populations: Sequence[float], failure: Tuple[float, float] = (0.0, 0.0)) -> SevenOutcome:
    """Map mode populations at the mirror-image input plane onto D0..D6"""
    pops = np.asarray(populations, dtype=float).reshape(len(PATHS), len(POLARIZATIONS))
    a, b, c, d = range(len(PATHS))
    return SevenOutcome((
        pops[a, 0],
        failure[0],
        failure[1],
        pops[b].sum(),
        pops[d].sum(),
        pops[c].sum(),
        pops[a, 1],
    ))


def fidelity_test(state: OpticalState, param: SourceParam, label: BlockLabel) -> SevenOutcome:
    """Run the photon back through the mirror image of the preparation circuit"""
    unprepared = preparation_circuit(param, label).inverse().apply(state)
    return detector_probabilities(np.abs(unprepared.vector) ** 2)


def _scaled(outcome: SevenOutcome, weight: float) -> np.ndarray:
    return weight * outcome.as_array()


def run_pipeline(param: SourceParam, label: BlockLabel, protocol: Protocol = Protocol.P1) -> SevenOutcome:
    """Unconditional outcome probabilities of prep -> code -> decode -> test"""
    if protocol is Protocol.P3:
        raise UsageError("the optical circuit implements P1 and P2 only")
    coded = coding_stage(prep_stage(param, label))
    probs = np.zeros(len(DETECTORS))
    if coded.channel is not None:
        test = fidelity_test(decode_stage(coded.channel), param, label)
        probs += _scaled(test, coded.success_prob)
    if protocol is Protocol.P1:
        probs[1], probs[2] = coded.d1, coded.d2
    else:
        # a fresh H photon switched into path A for every D1/D2 click
        fresh = fidelity_test(decode_stage(OpticalState.photon('A', 'H')), param, label)
        probs += _scaled(fresh, coded.d1 + coded.d2)
    return SevenOutcome(tuple(probs))


def optical_fidelity(param: SourceParam, protocol: Protocol = Protocol.P1, labels: Optional[Iterable[BlockLabel]] = None) -> float:
    """(1/8) sum_L D0_yes over the circuit pipeline"""
    labels = tuple(labels) if labels is not None else ALL_LABELS
    return sum(run_pipeline(param, label, protocol).d0_yes for label in labels) / len(labels)


__all__ = [
    'PATHS', 'POLARIZATIONS', 'DETECTORS', 'QUARTER_TURN', 'mode_index', 'OpticalState',
    'WavePlate', 'PolarizingBeamSplitter', 'Circuit', 'SevenOutcome', 'CodingOutcome',
    'theta_for_letter', 'preparation_stages', 'preparation_circuit', 'coding_circuit',
    'prep_stage', 'split_coded', 'coding_stage', 'decode_stage', 'detector_probabilities',
    'fidelity_test', 'run_pipeline', 'optical_fidelity',
]
