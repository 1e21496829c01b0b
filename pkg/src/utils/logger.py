"""
Structured logging for numerical runs.

Every record is one JSON object on stderr, so sweep logs can be filtered
with jq while stdout carries the report.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

PLAIN_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    return str(value)


class LogContext:
    """
    Keys attached to every record emitted inside a ``with`` block.

    The store is process-wide so that records from sweep worker threads
    carry the run's command and config hash as well.

        >>> with LogContext(command="n0", config_hash="3f2a9c01b7de"):
        ...     StructuredLogger(__name__).info("Bisection started")
    """

    _active: Dict[str, Any] = {}

    def __init__(self, **context: Any):
        self._added = context
        self._saved: Dict[str, Any] = {}

    def __enter__(self) -> "LogContext":
        self._saved = dict(LogContext._active)
        LogContext._active = {**self._saved, **self._added}
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        LogContext._active = self._saved

    @classmethod
    def get_context(cls) -> Dict[str, Any]:
        return dict(cls._active)


class StructuredLogger:
    """
    Thin wrapper over :mod:`logging` whose messages are JSON documents.

        >>> StructuredLogger("src.special.bessel").info("Root found", nu=0.0, h=3.196220616582)
        {"timestamp": "2026-10-18T09:12:44.512Z", "level": "INFO",
         "logger": "src.special.bessel", "message": "Root found",
         "context": {"nu": 0.0, "h": 3.196220616582}}
    """

    def __init__(self, name: str):
        self.name = name
        self.logger = logging.getLogger(name)

    def _entry(self, level: int, message: str, context: Dict[str, Any]) -> str:
        fields = {
            key: value
            for key, value in {**LogContext.get_context(), **context}.items()
            if value is not None
        }
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        entry: Dict[str, Any] = {
            "timestamp": stamp.replace("+00:00", "Z"),
            "level": logging.getLevelName(level),
            "logger": self.name,
            "message": message,
        }
        if fields:
            entry["context"] = fields
        return json.dumps(entry, default=_json_default)

    def _emit(self, level: int, message: str, context: Dict[str, Any], exc_info: bool = False) -> None:
        # filtered levels never build the JSON
        if self.logger.isEnabledFor(level):
            self.logger.log(level, self._entry(level, message, context), exc_info=exc_info)

    def debug(self, message: str, **context: Any) -> None:
        self._emit(logging.DEBUG, message, context)

    def info(self, message: str, **context: Any) -> None:
        self._emit(logging.INFO, message, context)

    def warning(self, message: str, **context: Any) -> None:
        self._emit(logging.WARNING, message, context)

    def error(self, message: str, exc_info: bool = False, **context: Any) -> None:
        """Log at ERROR; ``exc_info=True`` appends the active traceback."""
        self._emit(logging.ERROR, message, context, exc_info=exc_info)


def setup_logging(log_level: str = "INFO", structured: bool = True, stream: Optional[Any] = None) -> None:
    """
    Route the root logger to a single stderr handler.

    Args:
        log_level: Level name; unknown names fall back to INFO
        structured: Bare JSON lines when True, a timestamped prefix otherwise
        stream: Target stream, stderr by default
    """
    level = logging.getLevelName(str(log_level).upper())
    if not isinstance(level, int):
        level = logging.INFO

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s" if structured else PLAIN_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)

    StructuredLogger(__name__).debug("Logging configured", log_level=logging.getLevelName(level), structured=structured)
