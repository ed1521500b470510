"""Pure NumPy kernel: dense two-phase simplex, minimum-description mask, and
the recursive exact nearest-point search.

This module is the import-time fallback for the compiled kernel in
``native.pyx``; both implement identical semantics and tolerances. Everything
here is deliberately free of package-internal imports so the two kernels stay
drop-in interchangeable.

Status codes returned by ``min_norm_point``:
    0  found (query outside, exact point returned)
    1  inside (query already in the polyhedron)
    2  node budget exceeded
    3  time budget exceeded
    4  search exhausted (possible only when the polyhedron is empty)
"""

from __future__ import annotations

import time

import numpy as np

FOUND = 0
INSIDE = 1
NODE_BUDGET = 2
TIME_BUDGET = 3
EXHAUSTED = 4

_RED_TOL = 1e-10     # reduced-cost threshold for entering columns
_PIV_TOL = 1e-10     # minimum pivot magnitude
_FEAS_TOL = 1e-9     # phase-1 objective cutoff


class _Stop(Exception):
    def __init__(self, status: int):
        self.status = status


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = c


def _optimize(T, basis, cost, allowed, max_iter):
    """Bland-rule simplex loop on an equality tableau with rhs >= 0."""
    m = T.shape[0]
    ncols = T.shape[1] - 1
    body = T[:, :ncols]
    for _ in range(max_iter):
        red = cost - cost[basis] @ body
        eligible = np.nonzero(allowed & (red < -_RED_TOL))[0]
        if eligible.size == 0:
            return
        e = eligible[0]  # lowest index enters
        col = T[:, e]
        rows = col > _PIV_TOL
        if not rows.any():
            # Unbounded objective: impossible for the feasibility/margin LPs
            # built in this module (both are bounded by construction).
            raise RuntimeError("simplex: unbounded direction in a bounded LP")
        ratios = np.full(m, np.inf)
        ratios[rows] = T[rows, -1] / col[rows]
        rmin = ratios.min()
        ties = np.nonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))[0]
        r = ties[np.argmin(basis[ties])]  # lowest basis index leaves
        _pivot(T, basis, r, e)
    raise RuntimeError("simplex: iteration limit hit")


def _phase1(A, b):
    """Feasibility tableau for A x <= b with free x.

    Returns (T, basis, allowed, phase1_obj, nv) where nv is the number of
    free variables (columns are x+ | x- | slack | artificial | rhs) and
    allowed masks out artificial columns for any later phase.
    """
    m, nv = A.shape
    sign = np.where(b < 0.0, -1.0, 1.0)
    body = np.hstack([A, -A, np.eye(m)]) * sign[:, None]
    rhs = b * sign
    neg = np.nonzero(sign < 0.0)[0]
    n_art = neg.size
    ncols = 2 * nv + m + n_art
    T = np.zeros((m, ncols + 1))
    T[:, : 2 * nv + m] = body
    T[:, -1] = rhs
    basis = np.empty(m, dtype=np.int64)
    basis[:] = 2 * nv + np.arange(m)  # slack columns
    for j, i in enumerate(neg):
        T[i, 2 * nv + m + j] = 1.0
        basis[i] = 2 * nv + m + j
    allowed = np.ones(ncols, dtype=bool)
    allowed[2 * nv + m :] = False
    if n_art:
        cost = np.zeros(ncols)
        cost[2 * nv + m :] = 1.0
        art_allowed = np.ones(ncols, dtype=bool)
        _optimize(T, basis, cost, art_allowed, 400 + 40 * (m + ncols))
        obj = float(cost[basis] @ T[:, -1])
        # Drive basic artificials out on any nonzero structural pivot; a row
        # with none is linearly dependent and harmlessly keeps its zero.
        for r in range(m):
            if basis[r] >= 2 * nv + m:
                struct = np.nonzero(np.abs(T[r, : 2 * nv + m]) > _PIV_TOL)[0]
                if struct.size:
                    _pivot(T, basis, r, struct[0])
    else:
        obj = 0.0
    return T, basis, allowed, obj, nv


def feasible(A: np.ndarray, b: np.ndarray) -> bool:
    """Whether A x <= b has a solution (x unconstrained in sign)."""
    _, _, _, obj, _ = _phase1(np.asarray(A, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return obj <= _FEAS_TOL


def strict_margin(A: np.ndarray, b: np.ndarray) -> float:
    """Optimal value of: maximize t subject to A x + t <= b and t <= 1.

    Positive margin means A x < b is solvable; the t <= 1 cap keeps the LP
    bounded when the system's slack is unbounded. This extended LP is always
    feasible (push t low enough), so only phase 2 decides the answer.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    A2 = np.zeros((m + 1, n + 1))
    A2[:m, :n] = A
    A2[:, n] = 1.0
    b2 = np.append(b, 1.0)
    T, basis, allowed, obj, nv = _phase1(A2, b2)
    if obj > _FEAS_TOL:  # cannot happen; defensive
        return -np.inf
    ncols = T.shape[1] - 1
    cost = np.zeros(ncols)
    cost[nv - 1] = -1.0   # t+
    cost[2 * nv - 1] = 1.0  # t-
    _optimize(T, basis, cost, allowed, 400 + 40 * (m + ncols))
    values = np.zeros(ncols)
    values[basis] = T[:, -1]
    return float(values[nv - 1] - values[2 * nv - 1])


def _necessity_mask(V, S, feet, strict_tol):
    """Irredundancy mask for the halfspace family (V unit rows, offsets S).

    feet[i] must be a point on hyperplane i (any one). A halfspace whose foot
    is strictly interior to every other halfspace is provably necessary and
    skips its LP. The rest are tested with the strict flipped-row system,
    highest index first against the currently retained family, so duplicate
    constraints keep their lowest-index copy.
    """
    k = V.shape[0]
    keep = np.ones(k, dtype=bool)
    if k == 1:
        return keep
    G = feet @ V.T - S[None, :]
    np.fill_diagonal(G, -np.inf)
    certified = G.max(axis=1) < -1e-9
    for i in range(k - 1, -1, -1):
        if certified[i]:
            continue
        sel = keep.copy()
        sel[i] = False
        rows = np.vstack([V[sel], -V[i : i + 1]])
        rhs = np.concatenate([S[sel], [-S[i]]])
        if strict_margin(rows, rhs) <= strict_tol:
            keep[i] = False
    return keep


def min_h_mask(V: np.ndarray, S: np.ndarray, strict_tol: float = 1e-9) -> np.ndarray:
    """Mask of halfspaces forming the minimum description of their intersection."""
    V = np.ascontiguousarray(V, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    feet = S[:, None] * V
    return _necessity_mask(V, S, feet, strict_tol)


def min_norm_point(
    V: np.ndarray,
    S: np.ndarray,
    x: np.ndarray,
    eps: float = 1e-9,
    eps_dep: float = 1e-10,
    strict_tol: float = 1e-9,
    node_limit: int = 10_000_000,
    time_budget: float | None = None,
    deep_min_h: bool = True,
):
    """Exact nearest point of the polyhedron {z : V z <= S} from x.

    Returns (y, nodes, status). V rows must be unit norm. With status FOUND,
    y is the unique nearest point; with INSIDE, y is x itself. The search
    projects onto descending-signed-distance hyperplanes recursively,
    certifying candidate points with the strict-system optimality criterion.
    """
    V = np.ascontiguousarray(V, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    k, n = V.shape
    margins = V @ x - S
    if margins.max() <= eps:
        return x, 0, INSIDE
    deadline = None if time_budget is None else time.monotonic() + time_budget
    U = np.zeros((n, n))
    state = {"nodes": 0}

    def criterion(y):
        v = y - x
        nv = np.linalg.norm(v)
        if nv <= eps:
            return True
        rows = np.vstack([V, v[None, :] / nv])
        rhs = np.concatenate([S, [float(y @ v) / nv]])
        return strict_margin(rows, rhs) <= strict_tol

    def node(y, active, depth):
        assert depth <= n
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            raise _Stop(NODE_BUDGET)
        if deadline is not None and time.monotonic() > deadline:
            raise _Stop(TIME_BUDGET)
        m_full = V @ y - S
        if m_full.max() <= eps:
            if depth <= 1:
                return y  # single-projection feasibility implies optimality
            return y if criterion(y) else None
        if depth == n or active.size == 0:
            return None
        Va = V[active]
        Ud = U[:depth]
        W = Va - (Va @ Ud.T) @ Ud
        if depth:
            W -= (W @ Ud.T) @ Ud  # second pass keeps the basis orthonormal
        wn = np.linalg.norm(W, axis=1)
        indep = wn > eps_dep
        if not indep.any():
            return None
        idx = active[indep]
        Ui = W[indep] / wn[indep][:, None]
        dist = m_full[idx] / wn[indep]
        s_red = Ui @ y - dist
        feet = y[None, :] - dist[:, None] * Ui
        if deep_min_h or depth == 0:
            keep = _necessity_mask(Ui, s_red, feet, strict_tol)
        else:
            keep = np.ones(idx.size, dtype=bool)
        cand = np.nonzero(keep & (dist > eps))[0]
        if cand.size == 0:
            return None
        order = cand[np.argsort(-dist[cand], kind="stable")]
        alive = keep.copy()
        for c in order:
            alive[c] = False  # tried pivots stay removed: combinations only
            U[depth] = Ui[c]
            got = node(feet[c], idx[alive], depth + 1)
            if got is not None:
                return got
        return None

    try:
        y = node(x, np.arange(k, dtype=np.int64), 0)
    except _Stop as stop:
        return x, state["nodes"], stop.status
    if y is None:
        return x, state["nodes"], EXHAUSTED
    return y, state["nodes"], FOUND


def solve_many(V, S, X, **kwargs):
    """Vector/batch driver over rows of X. Returns (Y, dist, nodes, status)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    m = X.shape[0]
    Y = np.empty_like(X)
    dist = np.empty(m)
    nodes = np.empty(m, dtype=np.int64)
    status = np.empty(m, dtype=np.int64)
    Vc = np.ascontiguousarray(V, dtype=np.float64)
    Sc = np.ascontiguousarray(S, dtype=np.float64)
    for i in range(m):
        y, nd, st = min_norm_point(Vc, Sc, X[i], **kwargs)
        Y[i] = y
        nodes[i] = nd
        status[i] = st
        if st == INSIDE:
            dist[i] = (Vc @ X[i] - Sc).max()
        elif st == FOUND:
            dist[i] = float(np.linalg.norm(y - X[i]))
        else:
            dist[i] = np.nan
    return Y, dist, nodes, status


def svm_pair(Xa, t, C=1.0, epochs=1000, tol=1e-6):
    """L1 soft-margin SVM dual coordinate descent on pre-augmented rows.

    Natural pass order, at most `epochs` sweeps, stopping when no projected
    gradient exceeds `tol`. Returns the weight vector, one entry per column
    of Xa (the caller appends its own bias feature).
    """
    Xa = np.ascontiguousarray(Xa, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    m, n = Xa.shape
    q = (Xa**2).sum(axis=1)
    alpha = np.zeros(m)
    w = np.zeros(n)
    for _ in range(int(epochs)):
        worst = 0.0
        for l in range(m):
            g = t[l] * float(w @ Xa[l]) - 1.0
            if alpha[l] <= 0.0:
                pg = min(g, 0.0)
            elif alpha[l] >= C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                worst = max(worst, abs(pg))
                a_new = min(max(alpha[l] - g / q[l], 0.0), C)
                if a_new != alpha[l]:
                    w += (a_new - alpha[l]) * t[l] * Xa[l]
                    alpha[l] = a_new
        if worst < tol:
            break
    return w
