"""
Error Handler for qscode
Exception hierarchy, logging setup and error reporting shared by all modules
"""

import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional


class QSCError(Exception):
    """Base class for every error raised by qscode"""


class InvariantViolation(QSCError):
    """A state, unitary or ensemble failed its construction invariants"""


class DimensionMismatch(QSCError):
    """Operands live in Hilbert spaces of different dimension"""


class ImpossibleOutcome(QSCError):
    """A measurement outcome has (numerically) zero probability"""


class UndefinedLetterState(QSCError):
    """A branch state is undefined because its branch has zero weight"""


class UsageError(QSCError):
    """An operation was called with arguments outside its contract"""


class EstimationError(QSCError):
    """A fidelity estimator is undefined for the given counts"""


class ConfigError(QSCError):
    """Invalid run configuration"""


class EmptyRunError(ConfigError):
    """A run was requested with no trials"""


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


class ErrorHandler:
    def __init__(self, log_dir: Optional[str] = None):
        self.log_dir = Path(log_dir) if log_dir else None
        self.logger = self._setup_logging()
        self.handlers: Dict[str, List[Callable]] = {}

    def _setup_logging(self) -> logging.Logger:
        """Configure the package logger (console always, file when log_dir is set)"""
        logger = logging.getLogger('qscode')
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT)

        if not any(getattr(h, '_qscode_console', False) for h in logger.handlers):
            console_handler = logging.StreamHandler()
            console_handler.setLevel(logging.INFO)
            console_handler.setFormatter(formatter)
            console_handler.addFilter(lambda record: getattr(record, 'console', True))
            console_handler._qscode_console = True
            logger.addHandler(console_handler)

        if self.log_dir is not None:
            self.attach_log_file(self.log_dir)

        return logger

    def attach_log_file(self, log_dir) -> Path:
        """Add a DEBUG file handler writing to <log_dir>/qscode.log"""
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = (log_dir / 'qscode.log').resolve()

        for handler in self.logger.handlers:
            if isinstance(handler, logging.FileHandler) and Path(handler.baseFilename) == log_file:
                return log_file

        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
        self.logger.addHandler(file_handler)
        self.log_dir = log_dir
        return log_file

    def set_console_level(self, level: int):
        for handler in self.logger.handlers:
            if getattr(handler, '_qscode_console', False):
                handler.setLevel(level)

    def log_error(self, error: Exception, context: Optional[Dict] = None, console: bool = True) -> Dict[str, Any]:
        """Log an error with context; console=False keeps the record out of the console handler"""
        error_info = {
            'type': type(error).__name__,
            'message': str(error),
            'context': context or {}
        }
        self.logger.error(f"Error occurred: {error_info}", extra={'console': console})
        self._notify_handlers('error_occurred', error_info)
        return error_info

    def _notify_handlers(self, event_type: str, data: Any):
        """Notify all registered handlers about an event"""
        for handler in self.handlers.get(event_type, []):
            try:
                handler(data)
            except Exception as e:
                self.logger.error(f"Error in handler for {event_type}: {e}")

    def register_handler(self, event_type: str, handler: Callable):
        """Register a new event handler"""
        self.handlers.setdefault(event_type, []).append(handler)
        self.logger.debug(f"Registered handler for {event_type}")


# Singleton instance
error_handler = ErrorHandler(os.environ.get('QSC_LOG_DIR') or None)


def get_error_handler() -> ErrorHandler:
    """Get the global error handler instance"""
    return error_handler


def get_logger(name: str) -> logging.Logger:
    """Child logger of the package logger, e.g. get_logger('coding')"""
    return error_handler.logger.getChild(name)


__all__ = [
    'QSCError', 'InvariantViolation', 'DimensionMismatch', 'ImpossibleOutcome',
    'UndefinedLetterState', 'UsageError', 'EstimationError', 'ConfigError',
    'EmptyRunError', 'ErrorHandler', 'error_handler', 'get_error_handler',
    'get_logger',
]
