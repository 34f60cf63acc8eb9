# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense kernels: LU with partial pivoting and Lemke pivoting.

Mirrors ``_kernels_py`` function for function; see that module for the
return conventions.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef enum:
    SOLVED = 0
    RAY = 1
    DEGENERATE = 2
    MAX_PIVOTS = 3


def lu_factor(a, double tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lu_arr = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] lu = lu_arr
    cdef Py_ssize_t n = lu.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1] perm_arr = np.arange(n, dtype=np.intp)
    cdef cnp.intp_t[::1] perm = perm_arr
    cdef Py_ssize_t i, j, k, p
    cdef double amax, v, f, piv
    cdef cnp.intp_t ti
    for k in range(n):
        p = k
        amax = fabs(lu[k, k])
        for i in range(k + 1, n):
            v = fabs(lu[i, k])
            if v > amax:
                amax = v
                p = i
        if amax == 0.0 or amax < tol:
            return lu_arr, perm_arr, k + 1
        if p != k:
            for j in range(n):
                v = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = v
            ti = perm[k]
            perm[k] = perm[p]
            perm[p] = ti
        piv = lu[k, k]
        for i in range(k + 1, n):
            lu[i, k] /= piv
        for i in range(k + 1, n):
            f = lu[i, k]
            if f != 0.0:
                for j in range(k + 1, n):
                    lu[i, j] -= f * lu[k, j]
    return lu_arr, perm_arr, 0


def lu_solve(lu_in, perm_in, b):
    cdef double[:, ::1] lu = np.ascontiguousarray(lu_in, dtype=np.float64)
    cdef cnp.intp_t[::1] perm = np.ascontiguousarray(perm_in, dtype=np.intp)
    cdef double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = lu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        x[i] = bb[perm[i]]
    for i in range(1, n):
        s = 0.0
        for j in range(i):
            s += lu[i, j] * x[j]
        x[i] -= s
    for i in range(n - 1, -1, -1):
        s = 0.0
        for j in range(i + 1, n):
            s += lu[i, j] * x[j]
        x[i] = (x[i] - s) / lu[i, i]
    return x_arr


cdef void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t w = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double p = T[r, col]
    cdef double f
    for j in range(w):
        T[r, j] /= p
    for i in range(m):
        if i == r:
            continue
        f = T[i, col]
        if f != 0.0:
            for j in range(w):
                T[i, j] -= f * T[r, j]


cdef Py_ssize_t _lex_row(double[:, ::1] T, Py_ssize_t[::1] rows, Py_ssize_t nrows,
                         Py_ssize_t col, Py_ssize_t n, Py_ssize_t z0_row,
                         double tie_tol) noexcept nogil:
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef Py_ssize_t i, j, cnt, r
    cdef double best, ratio, scale
    cdef bint has_z0
    best = T[rows[0], rhs] / T[rows[0], col]
    for i in range(1, nrows):
        ratio = T[rows[i], rhs] / T[rows[i], col]
        if ratio < best:
            best = ratio
    scale = tie_tol * (fabs(best) if fabs(best) > 1.0 else 1.0)
    cnt = 0
    has_z0 = False
    for i in range(nrows):
        r = rows[i]
        if fabs(T[r, rhs] / T[r, col] - best) <= scale:
            rows[cnt] = r
            cnt += 1
            if r == z0_row:
                has_z0 = True
    if has_z0:
        return z0_row
    j = 0
    while cnt > 1 and j < n:
        best = T[rows[0], j] / T[rows[0], col]
        for i in range(1, cnt):
            ratio = T[rows[i], j] / T[rows[i], col]
            if ratio < best:
                best = ratio
        scale = tie_tol * (fabs(best) if fabs(best) > 1.0 else 1.0)
        nrows = cnt
        cnt = 0
        for i in range(nrows):
            r = rows[i]
            if fabs(T[r, j] / T[r, col] - best) <= scale:
                rows[cnt] = r
                cnt += 1
        j += 1
    if cnt == 1:
        return rows[0]
    return -1


def lemke(M_in, q_in, Py_ssize_t max_pivots, double pivot_tol=1e-12, double tie_tol=1e-12):
    cdef double[:, ::1] M = np.ascontiguousarray(M_in, dtype=np.float64)
    cdef double[::1] q = np.ascontiguousarray(q_in, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t i, j, r, nc, leaving, entering, z0_row
    cdef Py_ssize_t z0 = 2 * n
    cdef Py_ssize_t rhs = 2 * n + 1
    cdef Py_ssize_t pivots
    cdef double qmin, v

    if n == 0:
        return z_arr, SOLVED, 0
    qmin = q[0]
    for i in range(1, n):
        if q[i] < qmin:
            qmin = q[i]
    if qmin >= 0.0:
        return z_arr, SOLVED, 0

    cdef double[:, ::1] T = np.zeros((n, 2 * n + 2), dtype=np.float64)
    cdef Py_ssize_t[::1] basis = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cand = np.empty(n, dtype=np.intp)
    for i in range(n):
        T[i, i] = 1.0
        for j in range(n):
            T[i, n + j] = -M[i, j]
        T[i, z0] = -1.0
        T[i, rhs] = q[i]

    r = 0
    v = tie_tol * (fabs(qmin) if fabs(qmin) > 1.0 else 1.0)
    for i in range(n):
        if fabs(q[i] - qmin) <= v:
            r = i
    _pivot(T, r, z0)
    leaving = basis[r]
    basis[r] = z0
    pivots = 1
    entering = leaving + n
    while True:
        if pivots >= max_pivots:
            return z_arr, MAX_PIVOTS, pivots
        nc = 0
        z0_row = -1
        for i in range(n):
            if T[i, entering] > pivot_tol:
                cand[nc] = i
                nc += 1
            if basis[i] == z0:
                z0_row = i
        if nc == 0:
            return z_arr, RAY, pivots
        r = _lex_row(T, cand, nc, entering, n, z0_row, tie_tol)
        if r < 0:
            return z_arr, DEGENERATE, pivots
        _pivot(T, r, entering)
        pivots += 1
        leaving = basis[r]
        basis[r] = entering
        if leaving == z0:
            for i in range(n):
                if n <= basis[i] < 2 * n:
                    v = T[i, rhs]
                    z[basis[i] - n] = v if v > 0.0 else 0.0
            return z_arr, SOLVED, pivots
        entering = leaving + n if leaving < n else leaving - n
