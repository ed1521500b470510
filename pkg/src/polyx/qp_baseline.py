"""Reference solvers for min |y|^2 subject to V y <= s.

Two deliberately independent implementations: a first-order ADMM splitting
(the approximate baseline the benchmarks race against) and an exhaustive
subset-projection oracle used to certify the exact solver. Neither shares
code with the recursive search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from . import errors, geom

_SINGULAR_TOL = 1e-10
_SUBSET_GUARD = 1_000_000


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Constraints in the frame centered on the query point (so the
    objective is plain |y|^2)."""

    constraint_matrix: np.ndarray
    constraint_rhs: np.ndarray

    def __post_init__(self) -> None:
        V = np.atleast_2d(np.asarray(self.constraint_matrix, dtype=float))
        s = np.atleast_1d(np.asarray(self.constraint_rhs, dtype=float))
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise errors.InputError("constraint matrix must be k x n, k,n >= 1")
        if s.shape != (V.shape[0],):
            raise errors.InputError("rhs length must match constraint count")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(s))):
            raise errors.InputError("QP data contains non-finite values")
        V = V.copy()
        s = s.copy()
        V.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "constraint_matrix", V)
        object.__setattr__(self, "constraint_rhs", s)


class ApproxResult(NamedTuple):
    point: np.ndarray
    iterations: int
    converged: bool


def solve_approx(
    p: QpProblem, rel_tol: float = 1e-6, max_iter: int = 10_000, abs_tol: float = 1e-4
) -> ApproxResult:
    """ADMM on the splitting y, z: minimize |y|^2 + indicator(z <= s), V y = z.

    Fixed penalty rho=1 with residual balancing every 25 iterations and
    over-relaxation 1.6. Stops when both residuals fall under the customary
    first-order threshold abs_tol + rel_tol * scale. The absolute floor keeps
    the baseline honestly approximate on easy instances (OSQP ships 1e-3 for
    the same knob); set abs_tol=0 for a purely relative stop. Past max_iter
    the current iterate is returned flagged non-converged.
    """
    V = p.constraint_matrix
    s = p.constraint_rhs
    k, n = V.shape
    if rel_tol <= 0:
        raise errors.InputError("rel_tol must be positive")
    if abs_tol < 0:
        raise errors.InputError("abs_tol must be nonnegative")
    rho = 1.0
    alpha = 1.6
    G = V.T @ V
    chol = np.linalg.cholesky(2.0 * np.eye(n) + rho * G)
    y = np.zeros(n)
    z = np.minimum(np.zeros(k), s)
    u = np.zeros(k)
    eps_floor = 1e-12
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        rhs = rho * (V.T @ (z - u))
        y = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        Vy = V @ y
        Vy_rel = alpha * Vy + (1.0 - alpha) * z
        z_old = z
        z = np.minimum(Vy_rel + u, s)
        u = u + Vy_rel - z
        r_prim = float(np.linalg.norm(Vy - z))
        r_dual = float(rho * np.linalg.norm(V.T @ (z - z_old)))
        eps_prim = abs_tol + eps_floor + rel_tol * max(
            float(np.linalg.norm(Vy)), float(np.linalg.norm(z))
        )
        eps_dual = abs_tol + eps_floor + rel_tol * float(rho * np.linalg.norm(V.T @ u))
        if r_prim <= eps_prim and r_dual <= eps_dual:
            converged = True
            break
        if it % 25 == 0:
            if r_prim > 10.0 * r_dual:
                rho *= 2.0
                u /= 2.0
                chol = np.linalg.cholesky(2.0 * np.eye(n) + rho * G)
            elif r_dual > 10.0 * r_prim:
                rho /= 2.0
                u *= 2.0
                chol = np.linalg.cholesky(2.0 * np.eye(n) + rho * G)
    y = y.copy()
    y.flags.writeable = False
    return ApproxResult(y, it, converged)


def _subset_count(k: int, n: int) -> int:
    return sum(comb(k, r) for r in range(0, min(k, n) + 1))


def brute_force(P: geom.PolyhedronH, x) -> np.ndarray:
    """Exhaustive oracle: nearest point of P from x by subset enumeration.

    Every linearly independent set of at most n boundary hyperplanes yields
    one equality-projection candidate (the empty set yields x itself);
    feasible candidates compete on distance. Exponential on purpose; guarded
    to small instances.
    """
    V, S = P.matrix()
    x = geom.as_point(x, P.dim)
    k, n = V.shape
    if _subset_count(k, n) > _SUBSET_GUARD:
        raise errors.InputError(
            "instance too large for brute force (subset guard exceeded)"
        )
    best: np.ndarray | None = None
    best_d = np.inf
    if (V @ x - S).max() <= geom.DEFAULT_TOL:
        best, best_d = x.copy(), 0.0
    for r in range(1, min(k, n) + 1):
        for subset in itertools.combinations(range(k), r):
            Vr = V[list(subset)]
            sv = np.linalg.svd(Vr, compute_uv=False)
            if sv[-1] <= _SINGULAR_TOL:
                continue
            # normal equations of the equality projection onto the flat
            G = Vr @ Vr.T
            a = np.linalg.solve(G, S[list(subset)] - Vr @ x)
            y = x + Vr.T @ a
            if (V @ y - S).max() > geom.DEFAULT_TOL:
                continue
            d = float(np.linalg.norm(y - x))
            if d < best_d:
                best, best_d = y, d
    if best is None:
        raise errors.EmptyPolyhedronError(
            "no feasible candidate: the polyhedron is empty"
        )
    best = best.copy()
    best.flags.writeable = False
    return best
