"""
Caching system for the stratification toolkit.

This module provides an in-process cache for expensive, reusable numerical
artifacts (invariant density profiles of homogeneous fields, quadrature
rules keyed by their parameters). Keys are generated deterministically from
all parameters so cached and uncached runs produce identical results.
"""

import hashlib
import logging
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Optional

from .config import runtime_settings


logger = logging.getLogger(__name__)


class DensityCache:
    """
    Thread-safe LRU cache for computed profiles and rules.

    Provides deterministic key generation, least-recently-used eviction and
    hit/miss statistics.
    """

    def __init__(self, max_entries: int = 256):
        """
        Initialize the cache.

        Args:
            max_entries: Maximum number of entries kept before eviction
        """
        self.max_entries = max_entries
        self._entries: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = threading.RLock()
        self._hits = 0
        self._misses = 0

    def _generate_cache_key(self, key_type: str, identifier: str, **kwargs) -> str:
        """
        Generate a consistent cache key.

        Args:
            key_type: Type of cached data (e.g., 'profile', 'sphere_rule')
            identifier: Unique identifier for the data
            **kwargs: Additional parameters to include in key generation

        Returns:
            Generated cache key string
        """
        key_data = f"{key_type}:{identifier}"

        if kwargs:
            # Sort kwargs for consistent key generation
            sorted_kwargs = sorted(kwargs.items())
            params_str = "&".join(f"{k}={v!r}" for k, v in sorted_kwargs)
            key_data += f":{params_str}"

        # Hash long keys to keep them manageable
        if len(key_data) > 100:
            key_hash = hashlib.sha256(key_data.encode()).hexdigest()[:16]
            key_data = f"{key_type}:hash:{key_hash}"

        return key_data

    def get(self, cache_key: str) -> Optional[Any]:
        """Return the cached value for a key, or None."""
        with self._lock:
            if cache_key in self._entries:
                self._entries.move_to_end(cache_key)
                self._hits += 1
                return self._entries[cache_key]
            self._misses += 1
            return None

    def put(self, cache_key: str, value: Any) -> None:
        """Store a value, evicting the least recently used entry when full."""
        with self._lock:
            self._entries[cache_key] = value
            self._entries.move_to_end(cache_key)
            while len(self._entries) > self.max_entries:
                evicted, _ = self._entries.popitem(last=False)
                logger.debug(f"Evicted cache key {evicted}")

    def get_or_compute(self, key_type: str, identifier: str, compute: Callable[[], Any], **kwargs) -> Any:
        """
        Return a cached value, computing and storing it on a miss.

        The computation runs outside the lock; concurrent misses on the same
        key compute the same deterministic value and the first store wins.
        """
        cache_key = self._generate_cache_key(key_type, identifier, **kwargs)
        cached = self.get(cache_key)
        if cached is not None:
            logger.debug(f"Cache hit for {cache_key}")
            return cached

        value = compute()
        with self._lock:
            if cache_key not in self._entries:
                self.put(cache_key, value)
            return self._entries[cache_key]

    def invalidate_cache(self, key_type: Optional[str] = None) -> int:
        """
        Invalidate cached data by key type, or everything.

        Returns:
            Number of keys deleted
        """
        with self._lock:
            if key_type is None:
                count = len(self._entries)
                self._entries.clear()
                return count
            doomed = [key for key in self._entries if key.startswith(f"{key_type}:")]
            for key in doomed:
                del self._entries[key]
            return len(doomed)

    def get_cache_stats(self) -> Dict[str, Any]:
        """
        Get cache statistics.

        Returns:
            Dictionary with cache statistics
        """
        with self._lock:
            return {
                "entries": len(self._entries),
                "max_entries": self.max_entries,
                "hits": self._hits,
                "misses": self._misses,
                "hit_rate": self._calculate_hit_rate(self._hits, self._misses)
            }

    def _calculate_hit_rate(self, hits: int, misses: int) -> float:
        """Calculate cache hit rate percentage."""
        total = hits + misses
        return round((hits / total) * 100, 2) if total > 0 else 0.0


# Global cache instance
density_cache = DensityCache(max_entries=runtime_settings().cache_size)
