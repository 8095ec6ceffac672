"""Shared infrastructure used by the fdcache entry points.

Provides the error hierarchy, logging setup, settings base class and
random-stream helpers.  Import from submodules directly: shared.errors,
shared.logging, shared.config, shared.types.
"""

from __future__ import annotations

__all__: list[str] = []
