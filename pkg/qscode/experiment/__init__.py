"""
Virtual Experiment for qscode
Monte Carlo photon counting through the optical coding circuit with finite
interferometer visibility, detector efficiency and dark counts, and the
post-selected fidelity estimators built from the per-label count tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..coding import ALL_LABELS, BlockLabel, SourceParam
from ..error_handler import ConfigError, EstimationError, UsageError, get_logger
from ..optics import (
    DETECTORS,
    PATHS,
    POLARIZATIONS,
    OpticalState,
    SevenOutcome,
    coding_circuit,
    detector_probabilities,
    prep_stage,
    preparation_stages,
    split_coded,
)

logger = get_logger('experiment')

MEASURED_F = 0.933
MEASURED_ERR = 0.006
MERGED_COLUMN = 'D4+D5'

FIRST_STEP = 0
SECOND_STEP = 1
DARK_STREAM = 2


@dataclass(frozen=True)
class DetectorConfig:
    """APD efficiency, dark rate (counts/s per detector), gate time (s), photon flux (1/s)"""

    efficiency: float = 0.7
    dark_rate: float = 100.0
    gate_time: float = 5.0
    signal_rate: float = 1e5

    def __post_init__(self):
        for name in ('efficiency', 'dark_rate', 'gate_time', 'signal_rate'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a nonnegative number, got {value}")
        if self.efficiency > 1:
            raise ConfigError(f"efficiency must not exceed 1, got {self.efficiency}")
        if self.gate_time == 0 or self.signal_rate == 0:
            raise ConfigError("gate_time and signal_rate must be positive")

    @classmethod
    def ideal(cls) -> 'DetectorConfig':
        return cls(efficiency=1.0, dark_rate=0.0)


@dataclass(frozen=True)
class ImperfectionConfig:
    """Fringe visibility of both interferometers and the second-step count matching accuracy"""

    visibility: float = 0.98
    second_step_count_accuracy: float = 0.03

    def __post_init__(self):
        if not (math.isfinite(self.visibility) and 0.0 <= self.visibility <= 1.0):
            raise ConfigError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not (math.isfinite(self.second_step_count_accuracy) and 0.0 <= self.second_step_count_accuracy < 1.0):
            raise ConfigError(f"second_step_count_accuracy must lie in [0, 1), got {self.second_step_count_accuracy}")

    @classmethod
    def ideal(cls) -> 'ImperfectionConfig':
        return cls(visibility=1.0, second_step_count_accuracy=0.0)


@dataclass(frozen=True)
class CountRecord:
    """N_j^L: photon counts per block label (rows) and detector D0..D6 (columns)"""

    counts: np.ndarray
    labels: Tuple[BlockLabel, ...] = ALL_LABELS
    merged_d45: bool = False

    def __post_init__(self):
        labels = tuple(self.labels)
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (len(labels), len(DETECTORS)):
            raise UsageError(f"count table must have shape ({len(labels)}, {len(DETECTORS)}), got {counts.shape}")
        if np.any(counts < 0):
            raise UsageError("photon counts must be nonnegative")
        if len(set(labels)) != len(labels):
            raise UsageError("duplicate block labels in count record")
        if self.merged_d45 and np.any(counts[:, 5] != 0):
            raise UsageError("a merged record keeps D4+D5 in the D4 column")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'labels', labels)

    def row(self, label: BlockLabel) -> np.ndarray:
        return self.counts[self.labels.index(label)]

    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def failures(self) -> np.ndarray:
        """N_1 + N_2 per label"""
        return self.counts[:, 1] + self.counts[:, 2]

    def merge_d45(self) -> 'CountRecord':
        """Single-APD view of D4 and D5"""
        if self.merged_d45:
            return self
        counts = np.array(self.counts)
        counts[:, 4] += counts[:, 5]
        counts[:, 5] = 0
        return CountRecord(counts, self.labels, merged_d45=True)

    def columns(self) -> Tuple[str, ...]:
        if self.merged_d45:
            return DETECTORS[:4] + (MERGED_COLUMN,) + DETECTORS[6:]
        return DETECTORS

    def to_frame(self) -> pd.DataFrame:
        table = np.delete(self.counts, 5, axis=1) if self.merged_d45 else self.counts
        frame = pd.DataFrame(table, columns=list(self.columns()))
        frame.insert(0, 'label', [str(label) for label in self.labels])
        return frame

    def to_csv(self, path: Union[str, Path, None] = None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False, sep=',', lineterminator='\n')

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'CountRecord':
        columns = list(frame.columns)
        merged = MERGED_COLUMN in columns
        expected = ['label'] + list((DETECTORS[:4] + (MERGED_COLUMN,) + DETECTORS[6:]) if merged else DETECTORS)
        if columns != expected:
            raise UsageError(f"unexpected count table columns {columns}")
        labels = tuple(BlockLabel.parse(str(text)) for text in frame['label'])
        table = frame[expected[1:]].to_numpy(dtype=np.int64)
        if merged:
            table = np.insert(table, 5, 0, axis=1)
        return cls(table, labels, merged_d45=merged)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'CountRecord':
        return cls.from_frame(pd.read_csv(path, comment='#', dtype={'label': str}))


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    std_error: float
    n_trials: int

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise EstimationError(f"fidelity estimate {self.value} outside [0, 1]")
        if not (self.std_error >= 0.0):
            raise EstimationError(f"negative standard error {self.std_error}")
        object.__setattr__(self, 'n_trials', int(self.n_trials))

    def format(self, digits: int = 4) -> str:
        return f"F={self.value:.{digits}f}±{self.std_error:.{digits}f}"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{'value': self.value, 'std_error': self.std_error, 'n_trials': self.n_trials}])

    def to_csv(self, path: Union[str, Path, None] = None) -> Optional[str]:
        return self.to_frame().to_csv(path, index=False, lineterminator='\n')

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'FidelityEstimate':
        row = pd.read_csv(path).iloc[0]
        return cls(float(row['value']), float(row['std_error']), int(row['n_trials']))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (..., label, step) key, reproducible in any evaluation order"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def _location_bit(mode: int, which: int) -> int:
    path = mode // len(POLARIZATIONS)
    return (path >> (1 - which)) & 1


def _dephasing_mask(which: int, visibility: float) -> np.ndarray:
    n = len(PATHS) * len(POLARIZATIONS)
    mask = np.ones((n, n))
    for i in range(n):
        for j in range(n):
            if _location_bit(i, which) != _location_bit(j, which):
                mask[i, j] = visibility
    return mask


def dephase(rho: np.ndarray, which: int, visibility: float) -> np.ndarray:
    """Scale coherences between the two arms of location qubit `which` (0 = first, 1 = second) by V"""
    return rho * _dephasing_mask(which, visibility)


def _evolve(rho: np.ndarray, unitary: np.ndarray) -> np.ndarray:
    return unitary @ rho @ unitary.conj().T


def _decode_and_test(rho: np.ndarray, param: SourceParam, label: BlockLabel, visibility: float) -> np.ndarray:
    """Mirror pass: decoder, then the inverted preparation with the two recombinations dephased"""
    first, second, third = preparation_stages(param, label)
    rho = _evolve(rho, coding_circuit().inverse().unitary())
    rho = _evolve(rho, third.inverse().unitary())
    rho = dephase(rho, 1, visibility)
    rho = _evolve(rho, second.inverse().unitary())
    rho = dephase(rho, 0, visibility)
    rho = _evolve(rho, first.inverse().unitary())
    return np.clip(np.real(np.diag(rho)), 0.0, None)


def outcome_distribution(param: SourceParam, label: BlockLabel, imperfections: ImperfectionConfig) -> SevenOutcome:
    """D0..D6 probabilities for one prepared block under protocol P1"""
    kept, d1, d2 = split_coded(prep_stage(param, label))
    rho = np.outer(kept, kept.conj())
    populations = _decode_and_test(rho, param, label, imperfections.visibility)
    return detector_probabilities(populations, (d1, d2))


def second_step_distribution(param: SourceParam, label: BlockLabel, imperfections: ImperfectionConfig) -> SevenOutcome:
    """D0..D6 probabilities for an H photon sent into channel A, bypassing the coding stage"""
    photon = OpticalState.photon('A', 'H').vector
    rho = np.outer(photon, photon.conj())
    return detector_probabilities(_decode_and_test(rho, param, label, imperfections.visibility))


def _normalized(outcome: SevenOutcome) -> np.ndarray:
    probs = outcome.as_array()
    return probs / probs.sum()


def dark_count_model(config: DetectorConfig, trials: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Poisson dark counts per detector, prorated to the simulated photon budget"""
    if trials < 0:
        raise UsageError("trials must be nonnegative")
    rng = rng if rng is not None else np.random.default_rng()
    exposure = trials / (config.signal_rate * config.gate_time)
    mean = config.dark_rate * config.gate_time * exposure
    return rng.poisson(mean, size=len(DETECTORS)).astype(np.int64)


def simulate_counts(
    param: SourceParam,
    config: DetectorConfig,
    imperfections: ImperfectionConfig,
    trials_per_label: int,
    seed: int,
    stream_key: Sequence[int] = (),
) -> CountRecord:
    """First step: trials_per_label photons per block, thinned by efficiency, plus dark counts"""
    if trials_per_label <= 0:
        raise UsageError(f"trials_per_label must be positive, got {trials_per_label}")
    rows = []
    for label in ALL_LABELS:
        probs = _normalized(outcome_distribution(param, label, imperfections))
        rng = stream(seed, *stream_key, label.index, FIRST_STEP)
        emitted = rng.multinomial(trials_per_label, probs)
        detected = rng.binomial(emitted, config.efficiency)
        dark = dark_count_model(config, trials_per_label, stream(seed, *stream_key, label.index, DARK_STREAM))
        rows.append(detected + dark)
        logger.debug(f"{label}: {rows[-1].tolist()}")
    return CountRecord(np.array(rows))


def simulate_second_step(
    param: SourceParam,
    first: CountRecord,
    imperfections: ImperfectionConfig,
    seed: int,
    stream_key: Sequence[int] = (),
) -> CountRecord:
    """Second step of P2: N_1 + N_2 detected photons per label (matched to +-accuracy) through decode + test"""
    rows = []
    accuracy = imperfections.second_step_count_accuracy
    for label in first.labels:
        rng = stream(seed, *stream_key, label.index, SECOND_STEP)
        target = int(first.row(label)[1] + first.row(label)[2])
        factor = 1.0 + rng.uniform(-accuracy, accuracy) if accuracy > 0 else 1.0
        total = int(round(target * factor))
        probs = _normalized(second_step_distribution(param, label, imperfections))
        rows.append(rng.multinomial(total, probs))
    return CountRecord(np.array(rows), first.labels)


def _checked_totals(counts: CountRecord) -> np.ndarray:
    totals = counts.totals()
    for label, total in zip(counts.labels, totals):
        if total <= 0:
            raise EstimationError(f"label {label} has no counts; the fidelity ratio is undefined")
    return totals.astype(float)


def estimate_f1(counts: CountRecord) -> FidelityEstimate:
    """(1/8) sum_L N_0^L / sum_j N_j^L with per-label binomial errors"""
    totals = _checked_totals(counts)
    ratios = counts.counts[:, 0] / totals
    variances = ratios * (1.0 - ratios) / totals
    n = len(counts.labels)
    value = float(np.mean(ratios))
    std_error = float(math.sqrt(np.sum(variances)) / n)
    return FidelityEstimate(min(max(value, 0.0), 1.0), std_error, int(totals.sum()))


def estimate_f2(counts: CountRecord, second_step: CountRecord, count_accuracy: Optional[float] = None) -> FidelityEstimate:
    """(1/8) sum_L (N_0^L + N_0^L(2)) / sum_j N_j^L"""
    if counts.labels != second_step.labels:
        raise UsageError("first and second step records cover different block labels")
    totals = _checked_totals(counts)
    failures = counts.failures().astype(float)
    second_totals = second_step.totals().astype(float)
    if count_accuracy is not None:
        for label, target, used in zip(counts.labels, failures, second_totals):
            if abs(used - target) > count_accuracy * target + 1:
                raise UsageError(f"label {label}: second step used {used:.0f} photons, expected {target:.0f} within {count_accuracy:.0%}")

    first_yes = counts.counts[:, 0]
    second_yes = second_step.counts[:, 0]
    ratios = (first_yes + second_yes) / totals

    # delta method: r1 = N0/N, m = (N1+N2)/N from the first-step multinomial, q = N0(2)/M binomial
    r1 = first_yes / totals
    m = failures / totals
    q = np.divide(second_yes, second_totals, out=np.zeros_like(second_totals), where=second_totals > 0)
    scale = np.divide(second_totals, totals)
    var_q = np.divide(q * (1.0 - q), second_totals, out=np.zeros_like(second_totals), where=second_totals > 0)
    variances = (r1 * (1 - r1) + q ** 2 * m * (1 - m) - 2 * q * r1 * m) / totals + scale ** 2 * var_q
    variances = np.clip(variances, 0.0, None)

    n = len(counts.labels)
    value = float(np.mean(ratios))
    std_error = float(math.sqrt(np.sum(variances)) / n)
    return FidelityEstimate(min(max(value, 0.0), 1.0), std_error, int(totals.sum() + second_totals.sum()))


def distance_to_measured(estimate: FidelityEstimate) -> Tuple[float, float]:
    """Difference to the measured F = 0.933 +- 0.006, raw and in units of the combined error"""
    difference = estimate.value - MEASURED_F
    sigma = math.hypot(MEASURED_ERR, estimate.std_error)
    return difference, difference / sigma


@dataclass(frozen=True)
class ExperimentResult:
    alpha_sq: float
    first_step: CountRecord
    second_step: CountRecord
    f1: FidelityEstimate
    f2: FidelityEstimate


@dataclass
class VirtualExperiment:
    """Counting setup shared across runs: detectors, interferometers, seed"""

    detector: DetectorConfig = field(default_factory=DetectorConfig)
    imperfections: ImperfectionConfig = field(default_factory=ImperfectionConfig)
    seed: int = 0

    def run(self, alpha_sq: float, trials_per_label: int, stream_key: Sequence[int] = ()) -> ExperimentResult:
        param = SourceParam.from_alpha_sq(alpha_sq)
        first = simulate_counts(param, self.detector, self.imperfections, trials_per_label, self.seed, stream_key)
        second = simulate_second_step(param, first, self.imperfections, self.seed, stream_key)
        f1 = estimate_f1(first)
        f2 = estimate_f2(first, second, count_accuracy=self.imperfections.second_step_count_accuracy)
        logger.info(f"alpha^2={alpha_sq:.4f}: F1ex {f1.format()}  F2ex {f2.format()}")
        return ExperimentResult(alpha_sq, first, second, f1, f2)


__all__ = [
    'MEASURED_F', 'MEASURED_ERR', 'DetectorConfig', 'ImperfectionConfig', 'CountRecord',
    'FidelityEstimate', 'stream', 'dephase', 'outcome_distribution',
    'second_step_distribution', 'dark_count_model', 'simulate_counts',
    'simulate_second_step', 'estimate_f1', 'estimate_f2', 'distance_to_measured',
    'ExperimentResult', 'VirtualExperiment',
]
