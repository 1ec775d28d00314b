"""Kernel selection: compiled extension if importable, pure Python otherwise.

Set ``ROBUST_TAILS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("ROBUST_TAILS_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

STATUS_ROOT = _pykernels.STATUS_ROOT
STATUS_SATURATED = _pykernels.STATUS_SATURATED

ftilde = _impl.ftilde
solve_bx = _impl.solve_bx
slackness = _impl.slackness
solve_lower = _impl.solve_lower
knn_within = _impl.knn_within
knn_cross = _impl.knn_cross
