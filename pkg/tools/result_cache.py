"""
On-disk memoization of verify checks and parameter scans.

Values are plain JSON-able dicts, so a cached rerun writes the same bytes
as a fresh one.
"""

import json
import os
from typing import Any, Callable, Optional

import diskcache

from tools.log_context import slog

DEFAULT_DIR = "logs/cache"

_CACHES: dict[str, diskcache.Cache] = {}


def cache_dir(configured: Optional[str] = None) -> str:
    """HSPINOR_CACHE_DIR beats the config value, which beats the default."""
    return os.getenv("HSPINOR_CACHE_DIR") or configured or DEFAULT_DIR


def _cache(directory: str) -> diskcache.Cache:
    if directory not in _CACHES:
        _CACHES[directory] = diskcache.Cache(directory)
    return _CACHES[directory]


def cache_key(name: str, params: dict[str, Any]) -> str:
    return f"{name}:{json.dumps(params, sort_keys=True, default=str)}"


def cached(
    name: str,
    params: dict[str, Any],
    compute: Callable[[], dict[str, Any]],
    enabled: bool = True,
    directory: Optional[str] = None,
    ttl_seconds: Optional[int] = None,
) -> dict[str, Any]:
    if not enabled:
        return compute()
    store = _cache(cache_dir(directory))
    key = cache_key(name, params)
    hit = store.get(key)
    if hit is not None:
        slog.debug("cache.hit", name=name, cache_key=key)
        return json.loads(hit)

    slog.debug("cache.miss", name=name, cache_key=key)
    value = compute()
    # stored as text so a hit decodes exactly what a miss returned
    payload = json.dumps(value, sort_keys=True, default=str)
    store.set(key, payload, expire=ttl_seconds)
    return json.loads(payload)


def clear(directory: Optional[str] = None) -> int:
    return _cache(cache_dir(directory)).clear()
