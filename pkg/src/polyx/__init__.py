"""Exact minimum-norm points and signed distances on convex polyhedra.

Polyhedra live in H-representation (intersections of closed halfspaces).
The package computes exact nearest points and signed distances, minimum
H-descriptions, an ADMM baseline for comparison, and builds on those a
small hyperspectral unmixing pipeline (clustering, polyhedral partitions,
abundance and probability maps) plus a reproducible benchmark harness.

The distance kernel exists twice: a compiled extension and a pure-Python
twin with identical semantics. Import picks the compiled one when present;
set POLYX_PURE=1 to force the fallback. `polyx.ENGINE` names the active
choice.
"""

__version__ = "0.1.0"

from ._kernel import ENGINE
from .errors import (
    BudgetExceededError,
    ConditioningError,
    ConvergenceError,
    DependenceError,
    DtypeError,
    EmptyPolyhedronError,
    FormatError,
    GenerationError,
    HeaderError,
    InputError,
    LengthMismatchError,
    PolyxError,
)
from .geom import (
    Halfspace,
    Hyperplane,
    PolyhedronH,
    halfspace_signed_distance,
    inside_signed_distance,
    load_polyhedron,
    min_h_description,
    save_polyhedron,
    support_filter,
)
from .minnorm import MinNormResult, signed_distance, signed_distances, solve

__all__ = [
    "ENGINE",
    "__version__",
    "BudgetExceededError",
    "ConditioningError",
    "ConvergenceError",
    "DependenceError",
    "DtypeError",
    "EmptyPolyhedronError",
    "FormatError",
    "GenerationError",
    "HeaderError",
    "InputError",
    "LengthMismatchError",
    "PolyxError",
    "Halfspace",
    "Hyperplane",
    "PolyhedronH",
    "halfspace_signed_distance",
    "inside_signed_distance",
    "load_polyhedron",
    "min_h_description",
    "save_polyhedron",
    "support_filter",
    "MinNormResult",
    "signed_distance",
    "signed_distances",
    "solve",
]
