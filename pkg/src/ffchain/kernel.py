"""Propagation-kernel backend selection.

The compiled extension (``ffchain._core``) carries the hot loop: the
adaptive Dormand-Prince stepper fused with the structured chain RHS and the
protocol-coefficient evaluation.  When it is missing (source checkout
without a build) or ``FFCHAIN_PURE`` is set in the environment, the
vectorized NumPy twin is used instead; both implement identical stepping
semantics and are pinned together by the parity tests.
"""

from __future__ import annotations

import os

from . import _core_py

_FORCE_PURE = bool(os.environ.get("FFCHAIN_PURE"))

if not _FORCE_PURE:
    try:
        from . import _core  # compiled extension
        if not hasattr(_core, "propagate_chain"):
            _core = None
    except ImportError:
        _core = None
else:
    _core = None

BACKEND = "compiled" if _core is not None else "python"


def propagate_chain(spec, params, schedule, config, t0, t1, m0, checkpoints,
                    breakpoints=()):
    if _core is not None:
        return _core.propagate_chain(spec, params, schedule, config,
                                     t0, t1, m0, checkpoints, breakpoints)
    return _core_py.propagate_chain(spec, params, schedule, config,
                                    t0, t1, m0, checkpoints, breakpoints)


def backend_for(pure: bool):
    """Explicit backend handle, used by the benchmark script."""
    if pure or _core is None:
        return _core_py
    return _core
