# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel: dense two-phase simplex, minimum-description mask, and
the recursive exact nearest-point search.

Semantics and tolerances are identical to ``pure.py``; keep the two in sync.
The solver loops run without the GIL so pixel batches can be chunked across
threads by the caller.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset
from libc.math cimport sqrt, fabs, INFINITY, NAN, isnan

from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    C_FOUND = 0
    C_INSIDE = 1
    C_NODE_BUDGET = 2
    C_TIME_BUDGET = 3
    C_EXHAUSTED = 4
    C_INTERNAL = 5

FOUND = C_FOUND
INSIDE = C_INSIDE
NODE_BUDGET = C_NODE_BUDGET
TIME_BUDGET = C_TIME_BUDGET
EXHAUSTED = C_EXHAUSTED

cdef double RED_TOL = 1e-10
cdef double PIV_TOL = 1e-10
cdef double FEAS_TOL = 1e-9


cdef double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return ts.tv_sec + 1e-9 * ts.tv_nsec


cdef double _dot(const double* a, const double* b, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(n):
        s += a[i] * b[i]
    return s


ctypedef struct WS:
    int k, n
    int MR, MC            # tableau bounds: rows, columns (rhs excluded)
    double eps, eps_dep, strict_tol
    long node_limit
    double deadline       # monotonic seconds; <= 0 disables
    int deep_min_h
    long nodes
    double* V             # k*n, unit rows
    double* S             # k
    double* x0            # n
    double* result        # n
    double* U             # n*n
    double* mfull         # k
    double* w             # n scratch
    # per-depth blocks, n+1 levels
    int* active           # (n+1)*k
    double* ylev          # (n+1)*n
    double* Ui            # (n+1)*k*n
    double* dist          # (n+1)*k
    double* sred          # (n+1)*k
    double* feet          # (n+1)*k*n
    int* idx              # (n+1)*k
    unsigned char* alive  # (n+1)*k
    unsigned char* cert   # (n+1)*k
    int* order            # (n+1)*k
    # simplex scratch
    double* T             # MR*(MC+1)
    long* basis           # MR
    double* cost          # MC
    unsigned char* allowed  # MC
    double* A2            # MR*(n+2)
    double* b2            # MR


cdef WS* _ws_alloc(int k, int n) except NULL:
    cdef WS* ws = <WS*> malloc(sizeof(WS))
    if ws == NULL:
        raise MemoryError()
    memset(ws, 0, sizeof(WS))
    ws.k = k
    ws.n = n
    ws.MR = k + 3
    ws.MC = 2 * (n + 2) + 2 * ws.MR + 2
    cdef int lev = n + 1
    ws.V = <double*> malloc(sizeof(double) * k * n)
    ws.S = <double*> malloc(sizeof(double) * k)
    ws.x0 = <double*> malloc(sizeof(double) * n)
    ws.result = <double*> malloc(sizeof(double) * n)
    ws.U = <double*> malloc(sizeof(double) * n * n)
    ws.mfull = <double*> malloc(sizeof(double) * k)
    ws.w = <double*> malloc(sizeof(double) * n)
    ws.active = <int*> malloc(sizeof(int) * lev * k)
    ws.ylev = <double*> malloc(sizeof(double) * lev * n)
    ws.Ui = <double*> malloc(sizeof(double) * lev * k * n)
    ws.dist = <double*> malloc(sizeof(double) * lev * k)
    ws.sred = <double*> malloc(sizeof(double) * lev * k)
    ws.feet = <double*> malloc(sizeof(double) * lev * k * n)
    ws.idx = <int*> malloc(sizeof(int) * lev * k)
    ws.alive = <unsigned char*> malloc(sizeof(unsigned char) * lev * k)
    ws.cert = <unsigned char*> malloc(sizeof(unsigned char) * lev * k)
    ws.order = <int*> malloc(sizeof(int) * lev * k)
    ws.T = <double*> malloc(sizeof(double) * ws.MR * (ws.MC + 1))
    ws.basis = <long*> malloc(sizeof(long) * ws.MR)
    ws.cost = <double*> malloc(sizeof(double) * ws.MC)
    ws.allowed = <unsigned char*> malloc(sizeof(unsigned char) * ws.MC)
    ws.A2 = <double*> malloc(sizeof(double) * ws.MR * (n + 2))
    ws.b2 = <double*> malloc(sizeof(double) * ws.MR)
    if (ws.V == NULL or ws.S == NULL or ws.x0 == NULL or ws.result == NULL or
            ws.U == NULL or ws.mfull == NULL or ws.w == NULL or
            ws.active == NULL or ws.ylev == NULL or ws.Ui == NULL or
            ws.dist == NULL or ws.sred == NULL or ws.feet == NULL or
            ws.idx == NULL or ws.alive == NULL or ws.cert == NULL or
            ws.order == NULL or ws.T == NULL or ws.basis == NULL or
            ws.cost == NULL or ws.allowed == NULL or ws.A2 == NULL or
            ws.b2 == NULL):
        _ws_free(ws)
        raise MemoryError()
    return ws


cdef void _ws_free(WS* ws) noexcept:
    if ws == NULL:
        return
    free(ws.V); free(ws.S); free(ws.x0); free(ws.result); free(ws.U)
    free(ws.mfull); free(ws.w); free(ws.active); free(ws.ylev); free(ws.Ui)
    free(ws.dist); free(ws.sred); free(ws.feet); free(ws.idx); free(ws.alive)
    free(ws.cert); free(ws.order); free(ws.T); free(ws.basis); free(ws.cost)
    free(ws.allowed); free(ws.A2); free(ws.b2)
    free(ws)


cdef int _optimize_c(double* T, long* basis, double* cost,
                     unsigned char* allowed, int M, int ncols,
                     int maxit) noexcept nogil:
    """Bland-rule simplex on an equality tableau with rhs >= 0."""
    cdef int it, i, j, e, r
    cdef int ld = ncols + 1
    cdef double red, ratio, rmin, thresh, piv, f
    cdef long bestb
    for it in range(maxit):
        e = -1
        for j in range(ncols):
            if allowed != NULL and allowed[j] == 0:
                continue
            red = cost[j]
            for i in range(M):
                if cost[basis[i]] != 0.0:
                    red -= cost[basis[i]] * T[i * ld + j]
            if red < -RED_TOL:
                e = j
                break
        if e < 0:
            return 0
        rmin = INFINITY
        for i in range(M):
            if T[i * ld + e] > PIV_TOL:
                ratio = T[i * ld + ncols] / T[i * ld + e]
                if ratio < rmin:
                    rmin = ratio
        if rmin == INFINITY:
            return -1
        thresh = rmin + 1e-12 * (1.0 + fabs(rmin))
        r = -1
        bestb = -1
        for i in range(M):
            if T[i * ld + e] > PIV_TOL:
                ratio = T[i * ld + ncols] / T[i * ld + e]
                if ratio <= thresh and (r < 0 or basis[i] < bestb):
                    bestb = basis[i]
                    r = i
        piv = T[r * ld + e]
        for j in range(ld):
            T[r * ld + j] /= piv
        for i in range(M):
            if i != r:
                f = T[i * ld + e]
                if f != 0.0:
                    for j in range(ld):
                        T[i * ld + j] -= f * T[r * ld + j]
        basis[r] = e
    return -1


cdef double _phase1_c(WS* ws, double* A, double* b, int M, int nv,
                      int* out_ncols) noexcept nogil:
    """Feasibility tableau for A x <= b, free x. Returns the phase-1 objective
    (NAN on internal failure); leaves the tableau feasible for phase 2."""
    cdef int i, j, n_art, art, ncols, ld, st
    cdef double sg, obj
    n_art = 0
    for i in range(M):
        if b[i] < 0.0:
            n_art += 1
    ncols = 2 * nv + M + n_art
    ld = ncols + 1
    memset(ws.T, 0, sizeof(double) * M * ld)
    art = 0
    for i in range(M):
        sg = 1.0 if b[i] >= 0.0 else -1.0
        for j in range(nv):
            ws.T[i * ld + j] = sg * A[i * nv + j]
            ws.T[i * ld + nv + j] = -sg * A[i * nv + j]
        ws.T[i * ld + 2 * nv + i] = sg
        ws.T[i * ld + ncols] = sg * b[i]
        if sg < 0.0:
            ws.T[i * ld + 2 * nv + M + art] = 1.0
            ws.basis[i] = 2 * nv + M + art
            art += 1
        else:
            ws.basis[i] = 2 * nv + i
    for j in range(ncols):
        ws.allowed[j] = 1 if j < 2 * nv + M else 0
    if n_art == 0:
        out_ncols[0] = ncols
        return 0.0
    for j in range(ncols):
        ws.cost[j] = 1.0 if j >= 2 * nv + M else 0.0
    st = _optimize_c(ws.T, ws.basis, ws.cost, NULL, M, ncols,
                     400 + 40 * (M + ncols))
    if st < 0:
        return NAN
    obj = 0.0
    for i in range(M):
        if ws.basis[i] >= 2 * nv + M:
            obj += ws.T[i * ld + ncols]
    # Drive basic artificials out on any structural pivot; an all-zero row is
    # linearly dependent and harmlessly keeps its zero artificial.
    cdef double piv, f
    cdef int rr, e
    for rr in range(M):
        if ws.basis[rr] >= 2 * nv + M:
            e = -1
            for j in range(2 * nv + M):
                if fabs(ws.T[rr * ld + j]) > PIV_TOL:
                    e = j
                    break
            if e >= 0:
                piv = ws.T[rr * ld + e]
                for j in range(ld):
                    ws.T[rr * ld + j] /= piv
                for i in range(M):
                    if i != rr:
                        f = ws.T[i * ld + e]
                        if f != 0.0:
                            for j in range(ld):
                                ws.T[i * ld + j] -= f * ws.T[rr * ld + j]
                ws.basis[rr] = e
    out_ncols[0] = ncols
    return obj


cdef double _strict_margin_c(WS* ws, double* A, double* b, int m, int n) noexcept nogil:
    """max t s.t. A x + t <= b, t <= 1 (always feasible). NAN on failure.

    Callers may pass A == ws.A2 / b == ws.b2; the in-place expansion to the
    widened system runs backward so writes never clobber unread rows.
    """
    cdef int M = m + 1
    cdef int nv = n + 1
    cdef int i, j, ncols, st, ld
    cdef double obj, tplus, tminus
    for j in range(n):
        ws.A2[m * nv + j] = 0.0
    ws.A2[m * nv + n] = 1.0
    ws.b2[m] = 1.0
    for i in range(m - 1, -1, -1):
        ws.A2[i * nv + n] = 1.0
        for j in range(n - 1, -1, -1):
            ws.A2[i * nv + j] = A[i * n + j]
        ws.b2[i] = b[i]
    obj = _phase1_c(ws, ws.A2, ws.b2, M, nv, &ncols)
    if isnan(obj) or obj > FEAS_TOL:
        return NAN
    ld = ncols + 1
    for j in range(ncols):
        ws.cost[j] = 0.0
    ws.cost[nv - 1] = -1.0
    ws.cost[2 * nv - 1] = 1.0
    st = _optimize_c(ws.T, ws.basis, ws.cost, ws.allowed, M, ncols,
                     400 + 40 * (M + ncols))
    if st < 0:
        return NAN
    tplus = 0.0
    tminus = 0.0
    for i in range(M):
        if ws.basis[i] == nv - 1:
            tplus = ws.T[i * ld + ncols]
        elif ws.basis[i] == 2 * nv - 1:
            tminus = ws.T[i * ld + ncols]
    return tplus - tminus


cdef int _necessity_c(WS* ws, double* Ui, double* sred, double* feet, int c,
                      unsigned char* keep, unsigned char* cert) noexcept nogil:
    """Irredundancy mask; see pure._necessity_mask for the contract."""
    cdef int i, j, msys, n = ws.n
    cdef double gmax, g, t
    if c == 1:
        keep[0] = 1
        return 0
    for i in range(c):
        keep[i] = 1
        gmax = -INFINITY
        for j in range(c):
            if j != i:
                g = _dot(feet + i * n, Ui + j * n, n) - sred[j]
                if g > gmax:
                    gmax = g
        cert[i] = 1 if gmax < -1e-9 else 0
    for i in range(c - 1, -1, -1):
        if cert[i]:
            continue
        msys = 0
        for j in range(c):
            if keep[j] and j != i:
                memcpy(ws.A2 + msys * n, Ui + j * n, sizeof(double) * n)
                ws.b2[msys] = sred[j]
                msys += 1
        for j in range(n):
            ws.A2[msys * n + j] = -Ui[i * n + j]
        ws.b2[msys] = -sred[i]
        msys += 1
        t = _strict_margin_c(ws, ws.A2, ws.b2, msys, n)
        if isnan(t):
            return -1
        if t <= ws.strict_tol:
            keep[i] = 0
    return 0


cdef int _criterion_c(WS* ws, double* y) noexcept nogil:
    """1 if y is the nearest point of the full family from x0, 0 if not,
    -1 on internal failure."""
    cdef int i, j, k = ws.k, n = ws.n
    cdef double nv = 0.0, s
    for j in range(n):
        ws.w[j] = y[j] - ws.x0[j]
        nv += ws.w[j] * ws.w[j]
    nv = sqrt(nv)
    if nv <= ws.eps:
        return 1
    memcpy(ws.A2, ws.V, sizeof(double) * k * n)
    for j in range(n):
        ws.A2[k * n + j] = ws.w[j] / nv
    memcpy(ws.b2, ws.S, sizeof(double) * k)
    s = 0.0
    for j in range(n):
        s += y[j] * ws.w[j]
    ws.b2[k] = s / nv
    cdef double t = _strict_margin_c(ws, ws.A2, ws.b2, k + 1, n)
    if isnan(t):
        return -1
    return 1 if t <= ws.strict_tol else 0


cdef int _node(WS* ws, int depth, double* y, int* active, int n_active) noexcept nogil:
    """Returns 1 found (ws.result filled), 0 exhausted branch, or a negative
    status (-NODE_BUDGET, -TIME_BUDGET, -_INTERNAL)."""
    cdef int i, j, t, a, c, u, na, norder, crit
    cdef int k = ws.k, n = ws.n
    cdef double mmax, mi, cdot, wn, tmp
    ws.nodes += 1
    if ws.nodes > ws.node_limit:
        return -C_NODE_BUDGET
    if ws.deadline > 0.0 and _now() > ws.deadline:
        return -C_TIME_BUDGET
    mmax = -INFINITY
    for i in range(k):
        mi = _dot(ws.V + i * n, y, n) - ws.S[i]
        ws.mfull[i] = mi
        if mi > mmax:
            mmax = mi
    if mmax <= ws.eps:
        if depth <= 1:
            memcpy(ws.result, y, sizeof(double) * n)
            return 1
        crit = _criterion_c(ws, y)
        if crit < 0:
            return -C_INTERNAL
        if crit:
            memcpy(ws.result, y, sizeof(double) * n)
            return 1
        return 0
    if depth == n or n_active == 0:
        return 0
    cdef int* idxL = ws.idx + depth * k
    cdef double* UiL = ws.Ui + depth * k * n
    cdef double* distL = ws.dist + depth * k
    cdef double* sredL = ws.sred + depth * k
    cdef double* feetL = ws.feet + depth * k * n
    cdef unsigned char* aliveL = ws.alive + depth * k
    cdef unsigned char* certL = ws.cert + depth * k
    cdef int* orderL = ws.order + depth * k
    a = 0
    cdef int p, d
    for t in range(n_active):
        i = active[t]
        memcpy(ws.w, ws.V + i * n, sizeof(double) * n)
        for p in range(2 if depth > 0 else 1):
            for d in range(depth):
                cdot = _dot(ws.w, ws.U + d * n, n)
                for j in range(n):
                    ws.w[j] -= cdot * ws.U[d * n + j]
        wn = sqrt(_dot(ws.w, ws.w, n))
        if wn <= ws.eps_dep:
            continue
        idxL[a] = i
        for j in range(n):
            UiL[a * n + j] = ws.w[j] / wn
        distL[a] = ws.mfull[i] / wn
        sredL[a] = _dot(UiL + a * n, y, n) - distL[a]
        for j in range(n):
            feetL[a * n + j] = y[j] - distL[a] * UiL[a * n + j]
        a += 1
    if a == 0:
        return 0
    if ws.deep_min_h or depth == 0:
        if _necessity_c(ws, UiL, sredL, feetL, a, aliveL, certL) < 0:
            return -C_INTERNAL
    else:
        for t in range(a):
            aliveL[t] = 1
    norder = 0
    for t in range(a):
        if aliveL[t] and distL[t] > ws.eps:
            orderL[norder] = t
            norder += 1
    if norder == 0:
        return 0
    # stable insertion sort, descending reduced distance; ties keep index order
    cdef int key
    for t in range(1, norder):
        key = orderL[t]
        u = t - 1
        while u >= 0 and distL[orderL[u]] < distL[key]:
            orderL[u + 1] = orderL[u]
            u -= 1
        orderL[u + 1] = key
    cdef int* childA = ws.active + (depth + 1) * k
    cdef double* ychild = ws.ylev + (depth + 1) * n
    cdef int res
    for t in range(norder):
        c = orderL[t]
        aliveL[c] = 0  # tried pivots stay removed: combinations only
        na = 0
        for u in range(a):
            if aliveL[u]:
                childA[na] = idxL[u]
                na += 1
        memcpy(ws.U + depth * n, UiL + c * n, sizeof(double) * n)
        memcpy(ychild, feetL + c * n, sizeof(double) * n)
        res = _node(ws, depth + 1, ychild, childA, na)
        if res != 0:
            return res
    return 0


cdef int _solve_one(WS* ws, double* x, double* out_y, double* out_dist,
                    long* out_nodes) noexcept nogil:
    """Full solve for one query; returns a kernel status code."""
    cdef int i, st
    cdef int k = ws.k, n = ws.n
    cdef double mmax, mi, d
    ws.nodes = 0
    memcpy(ws.x0, x, sizeof(double) * n)
    mmax = -INFINITY
    for i in range(k):
        mi = _dot(ws.V + i * n, x, n) - ws.S[i]
        if mi > mmax:
            mmax = mi
    if mmax <= ws.eps:
        memcpy(out_y, x, sizeof(double) * n)
        out_dist[0] = mmax
        out_nodes[0] = 0
        return C_INSIDE
    memcpy(ws.ylev, x, sizeof(double) * n)
    for i in range(k):
        ws.active[i] = i
    st = _node(ws, 0, ws.ylev, ws.active, k)
    out_nodes[0] = ws.nodes
    if st == 1:
        memcpy(out_y, ws.result, sizeof(double) * n)
        d = 0.0
        for i in range(n):
            d += (ws.result[i] - x[i]) * (ws.result[i] - x[i])
        out_dist[0] = sqrt(d)
        return C_FOUND
    memcpy(out_y, x, sizeof(double) * n)
    out_dist[0] = NAN
    if st == 0:
        return C_EXHAUSTED
    return -st


cdef void _ws_config(WS* ws, double eps, double eps_dep, double strict_tol,
                     long node_limit, object time_budget, bint deep_min_h) noexcept:
    ws.eps = eps
    ws.eps_dep = eps_dep
    ws.strict_tol = strict_tol
    ws.node_limit = node_limit
    ws.deadline = 0.0
    if time_budget is not None:
        ws.deadline = _now() + <double> time_budget
    ws.deep_min_h = 1 if deep_min_h else 0
    ws.nodes = 0


def feasible(A, b):
    """Whether A x <= b has a solution (x unconstrained in sign)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Ac = \
        np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] bc = \
        np.ascontiguousarray(b, dtype=np.float64)
    cdef int m = Ac.shape[0], n = Ac.shape[1]
    cdef WS* ws = _ws_alloc(m + 2, n + 2)
    cdef double* ap = &Ac[0, 0]
    cdef double* bp = &bc[0]
    cdef int ncols
    cdef double obj
    try:
        with nogil:
            obj = _phase1_c(ws, ap, bp, m, n, &ncols)
        if isnan(obj):
            raise RuntimeError("simplex failure in feasibility phase")
        return bool(obj <= FEAS_TOL)
    finally:
        _ws_free(ws)


def strict_margin(A, b):
    """Optimal t of: maximize t s.t. A x + t <= b, t <= 1."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Ac = \
        np.ascontiguousarray(A, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] bc = \
        np.ascontiguousarray(b, dtype=np.float64)
    cdef int m = Ac.shape[0], n = Ac.shape[1]
    cdef WS* ws = _ws_alloc(m + 2, n + 2)
    cdef double* ap = &Ac[0, 0]
    cdef double* bp = &bc[0]
    cdef double t
    try:
        with nogil:
            t = _strict_margin_c(ws, ap, bp, m, n)
        if isnan(t):
            raise RuntimeError("simplex failure in strict-margin phase")
        return float(t)
    finally:
        _ws_free(ws)


def min_h_mask(V, S, double strict_tol=1e-9):
    """Mask of halfspaces forming the minimum description of their intersection."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Vc = \
        np.ascontiguousarray(V, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] Sc = \
        np.ascontiguousarray(S, dtype=np.float64)
    cdef int k = Vc.shape[0], n = Vc.shape[1]
    cdef WS* ws = _ws_alloc(k, n)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] keep = \
        np.empty(k, dtype=np.uint8)
    cdef double* vp = &Vc[0, 0]
    cdef double* sp = &Sc[0]
    cdef unsigned char* kp = &keep[0]
    cdef int i, j, st
    try:
        ws.strict_tol = strict_tol
        with nogil:
            memcpy(ws.V, vp, sizeof(double) * k * n)
            memcpy(ws.S, sp, sizeof(double) * k)
            for i in range(k):
                for j in range(n):
                    ws.feet[i * n + j] = sp[i] * vp[i * n + j]
            st = _necessity_c(ws, ws.V, ws.S, ws.feet, k, kp, ws.cert)
        if st < 0:
            raise RuntimeError("simplex failure in necessity test")
        return keep.astype(bool)
    finally:
        _ws_free(ws)


def min_norm_point(V, S, x, double eps=1e-9, double eps_dep=1e-10,
                   double strict_tol=1e-9, long node_limit=10_000_000,
                   time_budget=None, bint deep_min_h=True):
    """Exact nearest point of {z : V z <= S} from x. Returns (y, nodes, status)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Vc = \
        np.ascontiguousarray(V, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] Sc = \
        np.ascontiguousarray(S, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] xc = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef int k = Vc.shape[0], n = Vc.shape[1]
    cdef WS* ws = _ws_alloc(k, n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] y = np.empty(n)
    cdef double* vp = &Vc[0, 0]
    cdef double* sp = &Sc[0]
    cdef double* xp = &xc[0]
    cdef double* yp = &y[0]
    cdef double dist
    cdef long nodes
    cdef int st
    try:
        _ws_config(ws, eps, eps_dep, strict_tol, node_limit, time_budget,
                   deep_min_h)
        with nogil:
            memcpy(ws.V, vp, sizeof(double) * k * n)
            memcpy(ws.S, sp, sizeof(double) * k)
            st = _solve_one(ws, xp, yp, &dist, &nodes)
        if st == C_INTERNAL:
            raise RuntimeError("simplex failure inside the solver")
        return y, int(nodes), int(st)
    finally:
        _ws_free(ws)


def solve_many(V, S, X, double eps=1e-9, double eps_dep=1e-10,
               double strict_tol=1e-9, long node_limit=10_000_000,
               time_budget=None, bint deep_min_h=True):
    """Batch driver over rows of X. Returns (Y, dist, nodes, status).

    The time budget, when given, applies per solve. The loop itself runs
    without the GIL.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Vc = \
        np.ascontiguousarray(V, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] Sc = \
        np.ascontiguousarray(S, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Xc = \
        np.ascontiguousarray(X, dtype=np.float64)
    cdef int k = Vc.shape[0], n = Vc.shape[1]
    cdef Py_ssize_t m = Xc.shape[0], i
    cdef WS* ws = _ws_alloc(k, n)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Y = np.empty((m, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] D = np.empty(m)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] ND = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] ST = np.empty(m, dtype=np.int64)
    cdef double* vp = &Vc[0, 0]
    cdef double* sp = &Sc[0]
    cdef double* xp = &Xc[0, 0] if m > 0 else NULL
    cdef double* yp = &Y[0, 0] if m > 0 else NULL
    cdef double* dp = &D[0] if m > 0 else NULL
    cdef cnp.int64_t* ndp = &ND[0] if m > 0 else NULL
    cdef cnp.int64_t* stp = &ST[0] if m > 0 else NULL
    cdef double budget = 0.0
    cdef bint has_budget = time_budget is not None
    cdef long nodes
    cdef int st, err = 0
    if has_budget:
        budget = <double> time_budget
    try:
        _ws_config(ws, eps, eps_dep, strict_tol, node_limit, None, deep_min_h)
        with nogil:
            memcpy(ws.V, vp, sizeof(double) * k * n)
            memcpy(ws.S, sp, sizeof(double) * k)
            for i in range(m):
                ws.deadline = (_now() + budget) if has_budget else 0.0
                st = _solve_one(ws, xp + i * n, yp + i * n, dp + i, &nodes)
                ndp[i] = nodes
                stp[i] = st
                if st == C_INTERNAL:
                    err = 1
                    break
        if err:
            raise RuntimeError("simplex failure inside the solver")
        return Y, D, ND, ST
    finally:
        _ws_free(ws)


def svm_pair(Xa, t, double C=1.0, long epochs=1000, double tol=1e-6):
    """L1 soft-margin SVM dual coordinate descent on pre-augmented rows.

    Same pass order and stop rule as the pure twin; the epoch loop runs
    without the GIL. Returns the weight vector, one entry per column of Xa.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] X = \
        np.ascontiguousarray(Xa, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] tc = \
        np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], n = X.shape[1], l, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] w = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] alpha = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] q = np.empty(m)
    cdef double* xp = &X[0, 0] if m > 0 and n > 0 else NULL
    cdef double* tp = &tc[0] if m > 0 else NULL
    cdef double* wp = &w[0] if n > 0 else NULL
    cdef double* ap = &alpha[0] if m > 0 else NULL
    cdef double* qp = &q[0] if m > 0 else NULL
    cdef double g, pg, worst, a_new, delta
    cdef long ep
    if m == 0 or n == 0:
        return w
    with nogil:
        for l in range(m):
            qp[l] = _dot(xp + l * n, xp + l * n, <int> n)
        for ep in range(epochs):
            worst = 0.0
            for l in range(m):
                g = tp[l] * _dot(wp, xp + l * n, <int> n) - 1.0
                if ap[l] <= 0.0:
                    pg = g if g < 0.0 else 0.0
                elif ap[l] >= C:
                    pg = g if g > 0.0 else 0.0
                else:
                    pg = g
                if pg != 0.0:
                    if fabs(pg) > worst:
                        worst = fabs(pg)
                    a_new = ap[l] - g / qp[l]
                    if a_new < 0.0:
                        a_new = 0.0
                    elif a_new > C:
                        a_new = C
                    if a_new != ap[l]:
                        delta = (a_new - ap[l]) * tp[l]
                        for j in range(n):
                            wp[j] += delta * xp[l * n + j]
                        ap[l] = a_new
            if worst < tol:
                break
    return w
