"""Backend selection for the polar flow kernels.

The compiled extension is preferred when importable; the pure-NumPy fallback
keeps the package fully functional from a plain source checkout.  Setting
``H2MARGIN_PURE_PY=1`` forces the fallback (used by the kernel benchmark and
by the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _flowcore_py

if os.environ.get("H2MARGIN_PURE_PY", "") == "1":
    _impl = _flowcore_py
    COMPILED = False
else:
    try:
        from . import _flowcore as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = _flowcore_py
        COMPILED = False

polar_injections = _impl.polar_injections
polar_flow_terms = _impl.polar_flow_terms

BACKEND = "compiled" if COMPILED else "numpy"
