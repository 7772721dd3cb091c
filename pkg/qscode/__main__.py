#!/usr/bin/env python3
"""
qscode - command-line front end

Modes:
- sweep      fidelity vs alpha^2 (analytic P1/P2/P3 curves + virtual experiment points)
- point      the same row for a single alpha^2
- histogram  per-label photon counts at one alpha^2 with the F1 estimate as footer

Usage:
python -m qscode --mode sweep --grid 0.5:1:11 --trials 100000 --out sweep.csv
python -m qscode --mode histogram --alpha-sq 0.9046 --out histogram.csv
"""

import asyncio
import logging
import re
import sys
import time
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import pandas as pd
import psutil

from .coding import Protocol, SourceParam, analytic_fidelity
from .config import RunConfig, describe, load_config
from .error_handler import ConfigError, EmptyRunError, QSCError, get_error_handler, get_logger
from .experiment import (
    MEASURED_ERR,
    MEASURED_F,
    CountRecord,
    FidelityEstimate,
    VirtualExperiment,
    distance_to_measured,
    estimate_f1,
    simulate_counts,
)

logger = get_logger('cli')

ANALYTIC_COLUMNS = {
    Protocol.P1: 'F1_analytic',
    Protocol.P2: 'F2_analytic',
    Protocol.P3: 'F3_analytic',
}

FOOTER_PATTERN = re.compile(
    r"^# (?P<short>F=\S+) value=(?P<value>\S+) std_error=(?P<err>\S+) n_trials=(?P<n>\d+)$"
)


@dataclass
class Event:
    type: str
    data: Dict[str, Any]
    timestamp: float = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = time.time()


class EventBus:
    """Minimal async event bus for run progress"""

    def __init__(self):
        self.subscribers = defaultdict(list)
        self.event_history = deque(maxlen=100)

    async def emit(self, event_type: str, data: Dict[str, Any]):
        event = Event(event_type, data)
        self.event_history.append(event)

        for handler in self.subscribers.get(event_type, []):
            try:
                if asyncio.iscoroutinefunction(handler):
                    await handler(event)
                else:
                    handler(event)
            except Exception as e:
                get_error_handler().log_error(e, {'event': event_type})

    def subscribe(self, event_type: str, handler: Callable):
        self.subscribers[event_type].append(handler)


def default_workers() -> int:
    """Physical cores, falling back to logical ones"""
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def sweep_row(config: RunConfig, index: int, alpha_sq: float) -> Dict[str, float]:
    """One output row; simulated columns only when trials > 0"""
    param = SourceParam.from_alpha_sq(alpha_sq)
    row: Dict[str, float] = {'alpha_sq': alpha_sq}
    for protocol in config.protocols:
        row[ANALYTIC_COLUMNS[protocol]] = analytic_fidelity(param, protocol)

    wants_sim = Protocol.P1 in config.protocols or Protocol.P2 in config.protocols
    if config.trials_per_label > 0 and wants_sim:
        experiment = VirtualExperiment(config.detector, config.imperfections, config.seed)
        result = experiment.run(alpha_sq, config.trials_per_label, stream_key=(index,))
        if Protocol.P1 in config.protocols:
            row['F1_sim'] = result.f1.value
            row['F1_err'] = result.f1.std_error
        if Protocol.P2 in config.protocols:
            row['F2_sim'] = result.f2.value
            row['F2_err'] = result.f2.std_error
    return row


async def sweep_rows(config: RunConfig, event_bus: Optional[EventBus] = None) -> pd.DataFrame:
    """Evaluate grid points concurrently; rows stay in grid order"""
    grid = config.alpha_grid()
    workers = config.workers or default_workers()
    loop = asyncio.get_running_loop()

    async def evaluate(index: int, alpha_sq: float) -> Dict[str, float]:
        row = await loop.run_in_executor(pool, sweep_row, config, index, alpha_sq)
        if event_bus is not None:
            await event_bus.emit('point.completed', {'index': index, 'alpha_sq': alpha_sq, 'row': row})
        return row

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = await asyncio.gather(*(evaluate(i, a) for i, a in enumerate(grid)))

    frame = pd.DataFrame(rows)
    if event_bus is not None:
        await event_bus.emit('run.completed', {'mode': config.mode, 'rows': len(frame)})
    return frame


def run_sweep(config: RunConfig) -> pd.DataFrame:
    """Fidelity table, one row per alpha^2 grid point"""
    return asyncio.run(sweep_rows(config))


def run_histogram(config: RunConfig) -> Tuple[CountRecord, FidelityEstimate]:
    """First-step count table at a single alpha^2 and its F1 estimate"""
    if config.trials_per_label <= 0:
        raise EmptyRunError("empty run: histogram mode needs --trials > 0")
    if config.alpha_sq is None:
        raise ConfigError("histogram mode needs a single --alpha-sq value")
    param = SourceParam.from_alpha_sq(config.alpha_sq)
    counts = simulate_counts(param, config.detector, config.imperfections, config.trials_per_label, config.seed)
    estimate = estimate_f1(counts)
    if config.merge_d45:
        counts = counts.merge_d45()
    return counts, estimate


def histogram_text(counts: CountRecord, estimate: FidelityEstimate) -> str:
    difference, sigmas = distance_to_measured(estimate)
    lines = [
        counts.to_csv(),
        f"# {estimate.format()} value={estimate.value!r} std_error={estimate.std_error!r} n_trials={estimate.n_trials}\n",
        f"# distance to measured F={MEASURED_F}±{MEASURED_ERR}: {difference:+.4f} ({sigmas:+.2f} sigma)\n",
    ]
    return ''.join(lines)


def read_histogram(path) -> Tuple[CountRecord, FidelityEstimate]:
    counts = CountRecord.from_csv(path)
    for line in Path(path).read_text(encoding='utf-8').splitlines():
        match = FOOTER_PATTERN.match(line)
        if match:
            return counts, FidelityEstimate(float(match['value']), float(match['err']), int(match['n']))
    raise ConfigError(f"{path}: histogram footer missing")


def read_sweep(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision='round_trip')


def sweep_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, sep=',', lineterminator='\n')


def write_output(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding='utf-8')
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc.strerror or exc}") from exc
    logger.info(f"wrote {out}")


class QSCApp:
    """Command dispatch for the three run modes"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.event_bus = EventBus()
        self.error_handler = get_error_handler()
        self.commands: Dict[str, Callable] = {}

        self.error_handler.set_console_level(logging.INFO if config.verbose else logging.WARNING)
        if config.log_dir is not None:
            self.error_handler.attach_log_file(config.log_dir)

        self._register_builtin_commands()
        self.event_bus.subscribe('point.completed', self._handle_point_completed)
        self.event_bus.subscribe('run.completed', self._handle_run_completed)

    def _register_builtin_commands(self):
        self.commands.update({
            'sweep': self._cmd_sweep,
            'point': self._cmd_point,
            'histogram': self._cmd_histogram,
        })

    def _handle_point_completed(self, event: Event):
        logger.debug(f"alpha^2={event.data['alpha_sq']:.4f} done")

    def _handle_run_completed(self, event: Event):
        logger.info(f"{event.data['mode']}: {event.data['rows']} row(s)")

    async def start(self) -> str:
        logger.info("qscode run: " + " ".join(describe(self.config)))
        handler = self.commands.get(self.config.mode)
        if handler is None:
            raise ConfigError(f"unknown mode {self.config.mode!r}")
        text = await handler()
        write_output(text, self.config.out)
        return text

    async def _cmd_sweep(self) -> str:
        return sweep_text(await sweep_rows(self.config, self.event_bus))

    async def _cmd_point(self) -> str:
        return await self._cmd_sweep()

    async def _cmd_histogram(self) -> str:
        counts, estimate = run_histogram(self.config)
        await self.event_bus.emit('run.completed', {'mode': 'histogram', 'rows': len(counts.labels)})
        return histogram_text(counts, estimate)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit status"""
    try:
        config = load_config(argv)
        asyncio.run(QSCApp(config).start())
    except QSCError as e:
        get_error_handler().log_error(e, {'argv': list(argv) if argv is not None else sys.argv[1:]}, console=False)
        print(f"❌ {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
