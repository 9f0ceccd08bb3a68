"""Selects the round-kernel backend at import time.

The compiled extension is preferred when present; `FTPUSHSUM_BACKEND`
(``compiled`` or ``python``) forces the choice, which the benchmark and the
cross-backend tests rely on.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_forced = os.environ.get("FTPUSHSUM_BACKEND", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise ValueError(f"FTPUSHSUM_BACKEND must be 'compiled' or 'python', got {_forced!r}")
if _forced == "compiled" and _compiled is None:
    raise ImportError("FTPUSHSUM_BACKEND=compiled but the extension is not built")

if _forced == "python" or _compiled is None:
    _active = _kernels_py
else:
    _active = _compiled

HAVE_COMPILED = _compiled is not None
BACKEND = "python" if _active is _kernels_py else "compiled"

decomposed_round = _active.decomposed_round
baseline_round = _active.baseline_round
run_steady_rounds = _active.run_steady_rounds
