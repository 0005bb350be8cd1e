"""Optional numba acceleration.

Hot simulation kernels come in two flavours: a scalar-loop version compiled
with numba, and a batched numpy version.  ``ARTIFACT_DISABLE_NUMBA=1`` (or a
missing numba install) selects the numpy versions.
"""

from __future__ import annotations

import os
from typing import Callable, TypeVar

F = TypeVar("F", bound=Callable)


def _env_disabled() -> bool:
    return os.environ.get("ARTIFACT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _env_disabled():
        raise ImportError("disabled by environment")
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:
    _njit = None
    NUMBA_AVAILABLE = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if _njit is not None:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def deco(f: F) -> F:
        return f

    return deco


def use_numba() -> bool:
    """Whether dispatchers should call the compiled kernels."""
    return NUMBA_AVAILABLE and not _env_disabled()
