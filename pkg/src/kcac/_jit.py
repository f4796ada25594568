"""Backend switch for the numeric kernels.

Every kernel in :mod:`kcac.kernels` exists twice: a loop version compiled
with numba and a vectorized numpy version. ``KCAC_DISABLE_NUMBA=1`` (read once
at import) selects the numpy versions; they are also used when numba is not
installed.
"""

from __future__ import annotations

import os

DISABLE_NUMBA = os.environ.get("KCAC_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:  # pragma: no cover - depends on the environment
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE_NUMBA


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def njit_fast(fn):
    """Like :func:`njit` with ``fastmath``; only for kernels with no bit-exactness contract."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, fastmath=True)(fn)
    return fn


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
