"""
Run Configuration for qscode
Defaults < QSC_SEED / QSC_LOG_DIR environment < key=value config file < command-line flags
"""

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv

from ..coding import Protocol
from ..error_handler import ConfigError, QSCError, get_logger
from ..experiment import DetectorConfig, ImperfectionConfig

logger = get_logger('config')

MODES = ('sweep', 'point', 'histogram')

DEFAULTS: Dict[str, str] = {
    'mode': 'sweep',
    'alpha_sq': '',
    'grid': '0.5:1.0:11',
    'protocols': 'P1,P2,P3',
    'trials': '100000',
    'seed': '0',
    'efficiency': '0.7',
    'dark_rate': '100',
    'visibility': '0.98',
    'gate_time': '5',
    'signal_rate': '100000',
    'count_accuracy': '0.03',
    'merge_d45': 'false',
    'workers': '',
    'out': '',
    'log_dir': '',
    'verbose': 'false',
}

FLAG_KEYS = tuple(DEFAULTS)


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"grid needs at least one step, got {self.steps}")
        for bound in (self.start, self.stop):
            if not (0.0 < bound <= 1.0):
                raise ConfigError(f"grid bounds must lie in (0, 1], got {bound}")
        if self.stop < self.start:
            raise ConfigError(f"grid stop {self.stop} is below start {self.start}")

    def points(self) -> Tuple[float, ...]:
        if self.steps == 1:
            return (float(self.start),)
        return tuple(float(x) for x in np.linspace(self.start, self.stop, self.steps))

    def __str__(self):
        return f"{self.start!r}:{self.stop!r}:{self.steps}"


def parse_grid(text: str) -> GridSpec:
    parts = text.split(':')
    if len(parts) != 3:
        raise ConfigError(f"grid must look like start:stop:steps, got {text!r}")
    try:
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        raise ConfigError(f"grid must look like start:stop:steps, got {text!r}") from None


def parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off', ''):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    mode: str = 'sweep'
    alpha_sq: Optional[float] = None
    grid: Optional[GridSpec] = None
    protocols: Tuple[Protocol, ...] = (Protocol.P1, Protocol.P2, Protocol.P3)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    imperfections: ImperfectionConfig = field(default_factory=ImperfectionConfig)
    trials_per_label: int = 100000
    seed: int = 0
    out: Optional[Path] = None
    merge_d45: bool = False
    workers: Optional[int] = None
    log_dir: Optional[Path] = None
    verbose: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha_sq is not None and not (0.0 < self.alpha_sq <= 1.0):
            raise ConfigError(f"alpha_sq must lie in (0, 1], got {self.alpha_sq}")
        if self.trials_per_label < 0:
            raise ConfigError(f"trials must be nonnegative, got {self.trials_per_label}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if not self.protocols:
            raise ConfigError("at least one protocol is required")
        if self.mode in ('point', 'histogram') and self.alpha_sq is None:
            raise ConfigError(f"{self.mode} mode needs a single --alpha-sq value")

    def alpha_grid(self) -> Tuple[float, ...]:
        """Sweep points; a single --alpha-sq takes precedence over --grid"""
        if self.alpha_sq is not None:
            return (self.alpha_sq,)
        if self.grid is None:
            raise ConfigError("sweep mode needs --grid or --alpha-sq")
        return self.grid.points()

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> 'RunConfig':
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        merged = {**DEFAULTS, **{k: '' if v is None else str(v) for k, v in values.items()}}
        try:
            detector = DetectorConfig(
                efficiency=float(merged['efficiency']),
                dark_rate=float(merged['dark_rate']),
                gate_time=float(merged['gate_time']),
                signal_rate=float(merged['signal_rate']),
            )
            imperfections = ImperfectionConfig(
                visibility=float(merged['visibility']),
                second_step_count_accuracy=float(merged['count_accuracy']),
            )
            return cls(
                mode=merged['mode'].strip(),
                alpha_sq=float(merged['alpha_sq']) if merged['alpha_sq'].strip() else None,
                grid=parse_grid(merged['grid']) if merged['grid'].strip() else None,
                protocols=tuple(Protocol.parse(p) for p in merged['protocols'].split(',') if p.strip()),
                detector=detector,
                imperfections=imperfections,
                trials_per_label=int(merged['trials']),
                seed=int(merged['seed']),
                out=Path(merged['out']) if merged['out'].strip() else None,
                merge_d45=parse_bool(merged['merge_d45']),
                workers=int(merged['workers']) if merged['workers'].strip() else None,
                log_dir=Path(merged['log_dir']) if merged['log_dir'].strip() else None,
                verbose=parse_bool(merged['verbose']),
            )
        except ConfigError:
            raise
        except QSCError as exc:
            raise ConfigError(str(exc)) from exc
        except ValueError as exc:
            raise ConfigError(f"invalid configuration value: {exc}") from exc


def read_config_file(path) -> Dict[str, str]:
    """Flat key=value file (same syntax as a .env file)"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {k.strip().lower().replace('-', '_'): v for k, v in dotenv_values(path).items()}
    logger.debug(f"read {len(values)} keys from {path}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qscode',
        description='Simulate three-qubit quantum source coding: fidelity sweeps and virtual photon-counting runs.',
    )
    parser.add_argument('--config', help='flat key=value configuration file')
    parser.add_argument('--mode', choices=MODES)
    parser.add_argument('--alpha-sq', dest='alpha_sq', help='single alpha^2 value')
    parser.add_argument('--grid', help='alpha^2 grid as start:stop:steps')
    parser.add_argument('--protocols', help='comma separated subset of P1,P2,P3')
    parser.add_argument('--trials', help='photons per block label (0 = analytic only)')
    parser.add_argument('--seed')
    parser.add_argument('--efficiency', help='APD quantum efficiency')
    parser.add_argument('--dark-rate', dest='dark_rate', help='dark counts per second per APD')
    parser.add_argument('--visibility', help='interferometer fringe visibility')
    parser.add_argument('--gate-time', dest='gate_time', help='APD gating time in seconds')
    parser.add_argument('--signal-rate', dest='signal_rate', help='photon flux in photons per second')
    parser.add_argument('--count-accuracy', dest='count_accuracy', help='second-step photon number matching accuracy')
    parser.add_argument('--merge-d45', dest='merge_d45', action='store_const', const='true', help='report D4 and D5 as one APD')
    parser.add_argument('--workers', help='parallel grid points (default: physical cores)')
    parser.add_argument('--out', help='output CSV path (default: stdout)')
    parser.add_argument('--log-dir', dest='log_dir', help='directory for qscode.log')
    parser.add_argument('--verbose', action='store_const', const='true', help='progress messages on stderr')
    parser.add_argument('--no-sim', dest='trials', action='store_const', const='0', help='analytic columns only')
    return parser


def load_config(argv: Optional[Sequence[str]] = None, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Merge defaults, config file, QSC_SEED and flags into a RunConfig"""
    args = build_parser().parse_args(argv)
    if environ is None:
        load_dotenv()
        environ = os.environ

    values: Dict[str, str] = {}
    if environ.get('QSC_SEED'):
        values['seed'] = environ['QSC_SEED']
    if environ.get('QSC_LOG_DIR'):
        values['log_dir'] = environ['QSC_LOG_DIR']
    if args.config:
        values.update(read_config_file(args.config))
    for key in FLAG_KEYS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return RunConfig.from_mapping(values)


def describe(config: RunConfig) -> List[str]:
    return [
        f"mode={config.mode}",
        f"protocols={','.join(p.value for p in config.protocols)}",
        f"trials={config.trials_per_label}",
        f"seed={config.seed}",
        f"efficiency={config.detector.efficiency}",
        f"dark_rate={config.detector.dark_rate}",
        f"visibility={config.imperfections.visibility}",
    ]


__all__ = [
    'MODES', 'DEFAULTS', 'GridSpec', 'RunConfig', 'parse_grid', 'parse_bool',
    'read_config_file', 'build_parser', 'load_config', 'describe',
]
