"""Exact minimum-norm points and signed distances for H-polyhedra.

The solver projects the query onto intersections of boundary hyperplanes,
recursing through reduced constraint families until a candidate passes the
global optimality test (a strict linear system that is infeasible exactly at
the nearest point). The heavy search lives in the kernel; this module holds
the public types, the single-intersection projection, the family reduction
transform, the optimality test, and batch helpers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernel, errors, geom, lpfeas

#: Gram-Schmidt residual norms at or below this mean linear dependence
DEPENDENCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProjectionState:
    """Snapshot of the hyperplane-intersection projection loop.

    `current` sits on every already-visited hyperplane (within 1e-9);
    `ortho_basis` spans the normals visited so far, orthonormal within 1e-10.
    """

    current: np.ndarray
    ortho_basis: np.ndarray  # r x n, rows orthonormal
    active: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class MinNormResult:
    point: np.ndarray
    signed_distance: float
    iterations: int


def project_intersection(
    x, planes: Sequence[geom.Hyperplane], return_state: bool = False
):
    """Nearest point of the affine flat cut out by `planes`, from x.

    One pass of Gram-Schmidt over the plane normals; each step moves the
    point along the new orthonormal direction onto the corresponding plane,
    which keeps it on all earlier planes. Requires linearly independent
    normals.
    """
    planes = list(planes)
    if not planes:
        raise errors.InputError("need at least one hyperplane")
    n = planes[0].dim
    y = geom.as_point(x, n).copy()
    U = np.zeros((len(planes), n))
    r = 0
    for i, plane in enumerate(planes):
        if plane.dim != n:
            raise errors.InputError(f"hyperplane {i} has mismatched dimension")
        w = plane.normal - (plane.normal @ U[:r].T) @ U[:r]
        if r:
            w -= (w @ U[:r].T) @ U[:r]
        wn = float(np.linalg.norm(w))
        if wn <= DEPENDENCE_TOL:
            raise errors.DependenceError(
                f"normal of hyperplane {i} depends on the previous ones", index=i
            )
        u = w / wn
        # distance to plane i along u; <normal, u> equals the residual norm
        d = (float(plane.normal @ y) - plane.offset) / wn
        y -= d * u
        U[r] = u
        r += 1
    y.flags.writeable = False
    if return_state:
        basis = U[:r].copy()
        basis.flags.writeable = False
        return y, ProjectionState(y, basis, tuple(range(len(planes))))
    return y


def reduce_family(x, h, pivot: int, return_dropped: bool = False):
    """Re-express constraints on the pivot's boundary hyperplane.

    Input couples are raw (offset, normal) pairs; each is normalized first.
    For every non-pivot couple the normal is replaced by its unit component
    orthogonal to the pivot normal, and the offset is moved so the reduced
    halfspace cuts the pivot plane where the original did. Couples parallel
    to the pivot have no trace inside the plane and are dropped; their
    indices (in the input order) are reported when asked.
    """
    couples = [(float(s), geom.as_point(v, name=f"normal {j}")) for j, (s, v) in enumerate(h)]
    if not couples:
        raise errors.InputError("empty constraint family")
    n = couples[0][1].shape[0]
    if not 0 <= pivot < len(couples):
        raise errors.InputError(f"pivot {pivot} out of range")
    x = geom.as_point(x, n)
    norm_p = float(np.linalg.norm(couples[pivot][1]))
    if norm_p < 1e-12:
        raise errors.InputError("pivot normal is degenerate")
    p = couples[pivot][1] / norm_p
    reduced: list[tuple[float, np.ndarray]] = []
    dropped: list[int] = []
    for j, (s, v) in enumerate(couples):
        if j == pivot:
            continue
        if v.shape[0] != n:
            raise errors.InputError(f"normal {j} has mismatched dimension")
        nv = float(np.linalg.norm(v))
        if nv < 1e-12:
            raise errors.InputError(f"normal {j} is degenerate")
        s, v = s / nv, v / nv
        w = v - (v @ p) * p
        wn = float(np.linalg.norm(w))
        if wn < DEPENDENCE_TOL:
            dropped.append(j)
            continue
        vp = w / wn
        sp = float(x @ vp) - (float(x @ v) - s) / float(v @ vp)
        reduced.append((sp, vp))
    if return_dropped:
        return reduced, dropped
    return reduced


def is_min_norm(x, y, P: geom.PolyhedronH, tol: float = geom.DEFAULT_TOL) -> bool:
    """Global optimality test: is y the nearest point of P from x?

    Holds iff no point of P's interior is strictly closer to x than y, i.e.
    the strict system {interior of P} with the extra cut <z, y-x> < <y, y-x>
    is infeasible. y must belong to P; y equal to x is trivially optimal.
    """
    V, S = P.matrix()
    x = geom.as_point(x, P.dim)
    y = geom.as_point(y, P.dim)
    if (V @ y - S).max() > tol:
        raise errors.InputError("y must lie in the polyhedron")
    v = y - x
    nv = float(np.linalg.norm(v))
    if nv <= tol:
        return True
    v = v / nv
    rows = np.vstack([V, v[None, :]])
    rhs = np.concatenate([S, [float(y @ v)]])
    return not lpfeas.strict_feasible(lpfeas.LinearSystem(rows, rhs))


def _raise_for_status(status: int, nodes: int, V, S) -> None:
    if status == _kernel.NODE_BUDGET:
        raise errors.BudgetExceededError(
            f"node budget exhausted after {nodes} recursion nodes"
        )
    if status == _kernel.TIME_BUDGET:
        raise errors.BudgetExceededError("per-solve time budget exhausted")
    if status == _kernel.EXHAUSTED:
        if not _kernel.feasible(V, S):
            raise errors.EmptyPolyhedronError("the polyhedron is empty")
        raise RuntimeError("search exhausted on a non-empty polyhedron")


def solve(
    P: geom.PolyhedronH,
    x,
    tol: float = geom.DEFAULT_TOL,
    node_limit: int = 10_000_000,
    time_budget: float | None = None,
    deep_min_h: bool = True,
) -> MinNormResult:
    """Nearest point of P from x and the signed distance to the frontier.

    Inside queries return the query itself with the non-positive max-margin
    distance evaluated on the minimum description (so redundant halfspaces
    cannot shrink the magnitude). Outside queries run the exact recursive
    search. `tol` is the containment tolerance separating the two regimes.
    `deep_min_h` keeps redundancy elimination on at every recursion level;
    turning it off skips it below the first level, trading pruning for
    per-node cost.
    """
    V, S = P.matrix()
    x = geom.as_point(x, P.dim)
    y, nodes, status = _kernel.min_norm_point(
        V, S, x,
        eps=float(tol),
        node_limit=int(node_limit),
        time_budget=time_budget,
        deep_min_h=deep_min_h,
    )
    if status == _kernel.INSIDE:
        d = geom.inside_signed_distance(_irredundant(P), x, tol=float(tol))
        pt = x.copy()
        pt.flags.writeable = False
        return MinNormResult(pt, d, int(nodes))
    if status == _kernel.FOUND:
        y = np.asarray(y)
        y.flags.writeable = False
        return MinNormResult(y, float(np.linalg.norm(y - x)), int(nodes))
    _raise_for_status(status, nodes, V, S)
    raise AssertionError("unreachable")


def _irredundant(P: geom.PolyhedronH) -> geom.PolyhedronH:
    """geom.min_h_description, skipped when P is trivially irredundant."""
    if P.k == 1:
        return P
    return geom.min_h_description(P)


def signed_distance(P: geom.PolyhedronH, x, **kwargs) -> float:
    """Scalar form of solve: negative inside, positive outside, 0 on the frontier."""
    return solve(P, x, **kwargs).signed_distance


def _check_batch(status, node_limit: int, V, S) -> None:
    status = np.asarray(status)
    bad = status[status != _kernel.FOUND]
    if bad.size:
        _raise_for_status(int(bad[0]), node_limit, V, S)


def _thread_count(threads: int | None) -> int:
    env = os.environ.get("POLYX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise errors.InputError("POLYX_THREADS must be an integer") from None
    if threads is None:
        return os.cpu_count() or 1
    return max(1, int(threads))


def signed_distances(
    P: geom.PolyhedronH,
    X,
    threads: int | None = 1,
    node_limit: int = 10_000_000,
    deep_min_h: bool = True,
) -> np.ndarray:
    """Signed distance of every row of X to P.

    Interior rows are resolved in one vectorized max-margin pass over the
    minimum description; only exterior rows reach the recursive solver. The
    exterior batch may be chunked across threads (the compiled kernel drops
    the GIL); results are positionally assembled, so the thread count never
    affects values.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != P.dim:
        raise errors.InputError("X must be a points x dim matrix")
    if not np.all(np.isfinite(X)):
        raise errors.InputError("X contains non-finite values")
    V, S = P.matrix()
    out = np.empty(X.shape[0])
    m = X @ V.T - S
    worst = m.max(axis=1)
    inside = worst <= 1e-9
    if inside.any():
        Q = _irredundant(P)
        if Q.k != P.k:
            Vq, Sq = Q.matrix()
            out[inside] = (X[inside] @ Vq.T - Sq).max(axis=1)
        else:
            out[inside] = worst[inside]
    todo = np.flatnonzero(~inside)
    if todo.size:
        nthreads = _thread_count(threads)
        pts = X[todo]
        if nthreads <= 1 or todo.size < 64:
            _, dist, _, status = _kernel.solve_many(
                V, S, pts, node_limit=node_limit, deep_min_h=deep_min_h
            )
            _check_batch(status, node_limit, V, S)
            out[todo] = dist
        else:
            chunks = np.array_split(np.arange(todo.size), nthreads)
            results: list[np.ndarray | None] = [None] * len(chunks)

            def work(ci: int) -> None:
                idx = chunks[ci]
                _, dist, _, status = _kernel.solve_many(
                    V, S, pts[idx], node_limit=node_limit, deep_min_h=deep_min_h
                )
                _check_batch(status, node_limit, V, S)
                results[ci] = dist

            with ThreadPoolExecutor(max_workers=nthreads) as pool:
                list(pool.map(work, range(len(chunks))))
            out[todo] = np.concatenate([r for r in results if r is not None])
    return out
