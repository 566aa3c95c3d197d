"""Backend selection for the co-simulation kernel.

The compiled extension is used when it imports; setting
``QUADOBS_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
simulate_loop = _kernels_py.simulate_loop

if os.environ.get("QUADOBS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        simulate_loop = _compiled.simulate_loop


def get_loop(backend: str | None = None):
    """Return the loop for ``backend`` ("compiled", "python" or None for the default)."""
    if backend is None:
        return simulate_loop
    if backend == "python":
        return _kernels_py.simulate_loop
    if backend == "compiled":
        from . import _kernels
        return _kernels.simulate_loop
    raise ValueError(f"unknown backend {backend!r}")


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
