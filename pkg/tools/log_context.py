"""
JSON-line logging for hspinor runs.

Usage:
    from tools.log_context import bind, new_run_id, slog

    with bind(run_id=new_run_id(), command="verify"):
        slog.info("oracle.integrate.ok", system="weyl", latency_ms=12.4)

Bound fields ride along on every line emitted inside the block, including
lines emitted from worker threads started through ``in_context``. Payloads
with complex or numpy values are stringified with ``default=str``.
"""

import contextlib
import contextvars
import functools
import json
import logging
import sys
import time
import uuid
from typing import Any, Callable, Iterator, Optional, TextIO, TypeVar

T = TypeVar("T")

LOGGER_NAME = "hspinor"

_fields_var: contextvars.ContextVar[dict[str, Any]] = contextvars.ContextVar("log_fields", default={})


def new_run_id() -> str:
    return uuid.uuid4().hex[:8]


def get_context() -> dict[str, Any]:
    return dict(_fields_var.get())


@contextlib.contextmanager
def bind(**fields: Any) -> Iterator[dict[str, Any]]:
    """Merge ``fields`` into the log context for the duration of the block.

    Nested binds stack; ``None`` values are dropped.
    """
    merged = {**_fields_var.get(), **{k: v for k, v in fields.items() if v is not None}}
    token = _fields_var.set(merged)
    try:
        yield merged
    finally:
        _fields_var.reset(token)


def in_context(fn: Callable[..., T]) -> Callable[..., T]:
    """Wrap ``fn`` so executor threads log with the caller's bound fields."""
    snapshot = get_context()

    @functools.wraps(fn)
    def _wrapped(*args: Any, **kwargs: Any) -> T:
        with bind(**snapshot):
            return fn(*args, **kwargs)

    return _wrapped


def configure(level: int | str = logging.WARNING, stream: Optional[TextIO] = None) -> None:
    """Route the hspinor logger to ``stream`` (stderr) at ``level``."""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=level, stream=stream or sys.stderr, format="%(message)s", force=True)


class Timer:
    """Elapsed wall time in ms; usable as a context manager or via ``stop``."""

    def __init__(self) -> None:
        self._start = time.perf_counter()
        self.elapsed_ms = 0.0

    def __enter__(self) -> "Timer":
        self._start = time.perf_counter()
        return self

    def __exit__(self, *_: Any) -> None:
        self.stop()

    def stop(self) -> float:
        self.elapsed_ms = round((time.perf_counter() - self._start) * 1000, 1)
        return self.elapsed_ms


class _StructuredLogger:
    def __init__(self, name: str = LOGGER_NAME) -> None:
        self._logger = logging.getLogger(name)

    def _emit(self, level: int, event: str, extra: dict[str, Any], exc_info: bool = False) -> None:
        if not self._logger.isEnabledFor(level):
            return
        payload = {"event": event, **_fields_var.get(), **extra}
        self._logger.log(level, json.dumps(payload, default=str), exc_info=exc_info)

    def debug(self, event: str, **kw: Any) -> None:
        self._emit(logging.DEBUG, event, kw)

    def info(self, event: str, **kw: Any) -> None:
        self._emit(logging.INFO, event, kw)

    def warning(self, event: str, **kw: Any) -> None:
        self._emit(logging.WARNING, event, kw)

    def error(self, event: str, **kw: Any) -> None:
        self._emit(logging.ERROR, event, kw)

    def exception(self, event: str, **kw: Any) -> None:
        self._emit(logging.ERROR, event, kw, exc_info=True)


slog = _StructuredLogger()
