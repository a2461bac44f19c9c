"""Backend selection for the resolvent moment kernels.

The compiled extension is used when it imports; setting the environment
variable ``TBVERDET_PURE_PYTHON=1`` forces the numpy implementation.
"""
from __future__ import annotations

import os

from . import _moments_py

BACKEND = "numpy"
_impl = _moments_py

if os.environ.get("TBVERDET_PURE_PYTHON", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from . import _moments as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

VERDET_PATTERNS = _moments_py.VERDET_PATTERNS


def pair_moment(lam, za, zb, c):
    return _impl.pair_moment(lam, za, zb, c)


def verdet_moments(lam, za, zb, c):
    return _impl.verdet_moments(lam, za, zb, c)


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    out = {"numpy": _moments_py}
    try:
        from . import _moments

        out["cython"] = _moments
    except ImportError:
        pass
    return out
