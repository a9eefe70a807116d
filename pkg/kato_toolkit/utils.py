"""Utilities and helper functions for the Kato toolkit.

This module provides logging setup, progress tracking, the exception hierarchy,
float formatting for reports, and CSV/record helpers shared by every module.
"""

import csv
import io
import json
import logging
import math
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import psutil


# =============================================================================
# Exceptions
# =============================================================================

class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ToolkitError):
    """Invalid configuration; `field_path` points at the offending entry."""

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


class GeometryError(ToolkitError):
    """Dimension mismatch or an invalid domain/measure description."""


class KernelError(ToolkitError):
    """Invalid kernel arguments, including the transience gate for 0-order kernels."""


class QuadratureError(ToolkitError):
    """Quadrature could not be set up (not raised for mere non-convergence)."""


class SamplingError(ToolkitError):
    """A measure cannot be sampled, e.g. infinite mass without an envelope."""


class DiscretizationError(ToolkitError):
    """Grid too coarse, truncation too small or too many modes requested."""


# =============================================================================
# Logging
# =============================================================================

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    include_timestamp: bool = True
) -> logging.Logger:
    """Configure the `kato_toolkit` logger.

    Args:
        log_level: level name; unknown names fall back to INFO
        log_file: optional file receiving the same records as stderr
        include_timestamp: prefix records with the wall-clock time

    Returns:
        The package logger
    """
    level = logging.getLevelName(str(log_level).strip().upper())
    if not isinstance(level, int):
        level = logging.INFO
    root = logging.getLogger("kato_toolkit")
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    fmt = LOG_FORMAT if include_timestamp else LOG_FORMAT.split(" - ", 1)[1]
    formatter = logging.Formatter(fmt, datefmt="%Y-%m-%d %H:%M:%S")

    # stderr keeps stdout free for rendered tables
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    return root


class ProgressTracker:
    """Periodic INFO lines for batched Monte Carlo and search loops.

    `update` may be called from worker threads.
    """

    def __init__(self, total: int, description: str = "Batches", every: int = 10, interval: float = 30.0):
        self.total = total
        self.done = 0
        self.description = description
        self.every = max(1, every)
        self.interval = interval
        self._lock = threading.Lock()
        self._started = time.monotonic()
        self._last_line = self._started
        self._logger = logging.getLogger(__name__)

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self._started

    def update(self, count: int = 1) -> None:
        with self._lock:
            self.done += count
            now = time.monotonic()
            if self.done % self.every and self.done != self.total and now - self._last_line < self.interval:
                return
            self._last_line = now
            done = self.done
        rate = done / self.elapsed if self.elapsed > 0 else 0.0
        if self.total <= 0:
            self._logger.info(f"{self.description}: {done} done")
            return
        left = self.total - done
        eta = f", ETA {format_duration(left / rate)}" if rate > 0 and left > 0 else ""
        self._logger.info(f"{self.description}: {done}/{self.total} ({100.0 * done / self.total:.0f}%){eta}")

    def complete(self) -> None:
        self._logger.info(
            f"{self.description} finished: {self.done} in {format_duration(self.elapsed)}, "
            f"peak memory {peak_memory_mb():.1f} MB"
        )


def peak_memory_mb() -> float:
    """Resident memory of the current process in MB."""
    return psutil.Process().memory_info().rss / (1024.0 * 1024.0)


# =============================================================================
# Formatting
# =============================================================================

def format_float(value: Any, digits: int = 6) -> str:
    """Render a number with `digits` significant digits; infinities become 'inf'."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}g}"


def parse_float(text: str) -> Optional[float]:
    """Inverse of format_float for numeric cells."""
    text = text.strip()
    if text == "":
        return None
    return float(text)


def format_duration(seconds: float) -> str:
    """Format duration in human readable format (e.g. "2h 30m 15s")."""
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = int(seconds % 60)

    parts = []
    if hours > 0:
        parts.append(f"{hours}h")
    if minutes > 0:
        parts.append(f"{minutes}m")
    if secs > 0 or not parts:
        parts.append(f"{secs}s")
    return " ".join(parts)


def jsonable(value: Any) -> Any:
    """Convert a record to JSON-safe primitives, mapping +-inf to 'inf'/'-inf' strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if hasattr(value, "item") and callable(value.item):
        return jsonable(value.item())
    return value


def dumps_record(record: Dict[str, Any]) -> str:
    """One structured text record: sorted-key JSON, two-space indent."""
    return json.dumps(jsonable(record), indent=2, sort_keys=True, ensure_ascii=False)


def loads_record(text: str) -> Dict[str, Any]:
    return json.loads(text)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Deterministic CSV (RFC-style quoting, '\\n' line endings) with formatted floats."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(list(columns))
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_float(cell) for cell in row])
    return buffer.getvalue()


def parse_csv(text: str) -> List[Dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    return [dict(row) for row in reader]


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# =============================================================================
# Concurrency
# =============================================================================

def parallel_map(fn: Callable[[Any], Any], items: Sequence[Any], workers: int = 1) -> List[Any]:
    """Map fn over items, in a thread pool when workers > 1; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
