"""Linear-inequality feasibility: the non-strict and strict deciders.

Both questions reduce to a phase-1 simplex with Bland's rule; strictness is
decided by maximizing a uniform slack variable t capped at 1, so the LP stays
bounded even when the system's interior is unbounded. The kernel supplies the
tableau arithmetic (compiled when available).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel, errors

#: a system counts as strictly feasible when the optimal slack exceeds this
STRICT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """The inequality system rows . x (<|<=) rhs, one constraint per row."""

    rows: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise errors.InputError("rows must be a non-empty m x n matrix")
        if rhs.ndim != 1 or rhs.shape[0] != rows.shape[0]:
            raise errors.InputError("rhs length must match the row count")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise errors.InputError("system contains non-finite values")
        rows = rows.copy()
        rhs = rhs.copy()
        rows.flags.writeable = False
        rhs.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", rhs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


def feasible(sys: LinearSystem) -> bool:
    """Whether rows . x <= rhs admits a solution (x free in sign)."""
    return bool(_kernel.feasible(sys.rows, sys.rhs))


def strict_feasible(sys: LinearSystem) -> bool:
    """Whether rows . x < rhs admits a solution.

    Decided as max t s.t. rows . x + t <= rhs, t <= 1; strict iff the optimum
    exceeds STRICT_TOL.
    """
    return bool(_kernel.strict_margin(sys.rows, sys.rhs) > STRICT_TOL)
