"""Kernel selection: compiled extension when present, pure NumPy otherwise.

``POLYX_PURE=1`` in the environment forces the fallback even when the
compiled module imported fine; useful for debugging and for the engine
comparison benchmark.
"""

from __future__ import annotations

import os

from . import pure

FOUND = pure.FOUND
INSIDE = pure.INSIDE
NODE_BUDGET = pure.NODE_BUDGET
TIME_BUDGET = pure.TIME_BUDGET
EXHAUSTED = pure.EXHAUSTED

_impl = pure
ENGINE = "python"

if not os.environ.get("POLYX_PURE"):
    try:
        from . import native as _native
    except ImportError:
        pass
    else:
        _impl = _native
        ENGINE = "native"

feasible = _impl.feasible
strict_margin = _impl.strict_margin
min_h_mask = _impl.min_h_mask
min_norm_point = _impl.min_norm_point
solve_many = _impl.solve_many
svm_pair = _impl.svm_pair


def engines() -> dict:
    """Importable engines by name; at least the pure one."""
    table = {"python": pure}
    try:
        from . import native as nat
    except ImportError:
        pass
    else:
        table["native"] = nat
    return table
