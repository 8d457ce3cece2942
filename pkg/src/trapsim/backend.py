"""Event-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the
pure-Python kernel is the fallback and the reference. Both produce
bit-identical event sequences for the same seed, so which one runs only
affects speed. Set TRAPSIM_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernel_py

# chunk size for buffered uniform draws; part of the stream contract, do not
# change without invalidating recorded seeds
CHUNK = 4096

_FORCE_PY = bool(os.environ.get("TRAPSIM_PURE_PYTHON"))

if not _FORCE_PY:
    try:
        from . import _kernel  # type: ignore[attr-defined]

        BACKEND = "cython"
        simulate_events = _kernel.simulate_events
    except ImportError:
        BACKEND = "python"
        simulate_events = _kernel_py.simulate_events
else:
    BACKEND = "python"
    simulate_events = _kernel_py.simulate_events


def backend_name() -> str:
    return BACKEND


def available_backends() -> dict:
    """Map of importable kernel implementations, for benchmarks and tests."""
    impls = {"python": _kernel_py.simulate_events}
    try:
        from . import _kernel  # type: ignore[attr-defined]

        impls["cython"] = _kernel.simulate_events
    except ImportError:
        pass
    return impls
