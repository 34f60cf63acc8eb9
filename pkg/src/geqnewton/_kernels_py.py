"""Numpy implementation of the dense kernels.

This is the fallback used when the compiled ``_kernels_c`` extension is not
available. Both modules expose the same three functions with identical
signatures and return conventions, and must produce the same pivot sequence.

Status codes returned by :func:`lemke`::

    0  solved
    1  ray termination
    2  degenerate tie not resolved lexicographically
    3  pivot budget exhausted
"""
import numpy as np

SOLVED, RAY, DEGENERATE, MAX_PIVOTS = 0, 1, 2, 3


def lu_factor(a, tol):
    """Factor ``P a = L U`` in place on a copy, with partial pivoting.

    Returns ``(lu, perm, info)``. ``perm[i]`` is the original row stored in
    row ``i``. ``info`` is 0 on success, else ``k + 1`` where column ``k``
    had no pivot of magnitude above ``tol``.
    """
    lu = np.array(a, dtype=np.float64, order="C", copy=True)
    n = lu.shape[0]
    perm = np.arange(n, dtype=np.intp)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        amax = abs(lu[p, k])
        if amax == 0.0 or amax < tol:
            return lu, perm, k + 1
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, 0


def lu_solve(lu, perm, b):
    """Solve with factors from :func:`lu_factor`."""
    n = lu.shape[0]
    x = np.asarray(b, dtype=np.float64)[perm].copy()
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def _pivot(T, r, col):
    T[r] /= T[r, col]
    factors = T[:, col].copy()
    factors[r] = 0.0
    T -= np.outer(factors, T[r])


def _lex_row(T, rows, col, n, z0_row, tie_tol):
    """Lexicographic minimum ratio row among ``rows`` (entries of ``col`` > 0).

    Compares the rows of ``[rhs | B^-1]`` divided by the pivot column entry.
    Returns -1 when the tie survives every column.
    """
    d = T[rows, col]
    ratios = T[rows, -1] / d
    best = ratios.min()
    keep = np.abs(ratios - best) <= tie_tol * max(1.0, abs(best))
    rows, d = rows[keep], d[keep]
    if z0_row >= 0 and z0_row in rows:
        return int(z0_row)
    j = 0
    while len(rows) > 1 and j < n:
        ratios = T[rows, j] / d
        best = ratios.min()
        keep = np.abs(ratios - best) <= tie_tol * max(1.0, abs(best))
        rows, d = rows[keep], d[keep]
        j += 1
    return int(rows[0]) if len(rows) == 1 else -1


def lemke(M, q, max_pivots, pivot_tol=1e-12, tie_tol=1e-12):
    """Lemke's complementary pivoting with covering vector of ones.

    Returns ``(z, status, pivots)``.
    """
    M = np.asarray(M, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = q.shape[0]
    z = np.zeros(n)
    if n == 0 or q.min() >= 0.0:
        return z, SOLVED, 0
    # columns: w (0..n-1), z (n..2n-1), z0 (2n), rhs (2n+1)
    T = np.zeros((n, 2 * n + 2))
    T[:, :n] = np.eye(n)
    T[:, n:2 * n] = -M
    T[:, 2 * n] = -1.0
    T[:, -1] = q
    basis = np.arange(n)
    z0 = 2 * n

    qmin = q.min()
    ties = np.flatnonzero(np.abs(q - qmin) <= tie_tol * max(1.0, abs(qmin)))
    r = int(ties[-1])
    _pivot(T, r, z0)
    leaving = basis[r]
    basis[r] = z0
    pivots = 1
    entering = leaving + n
    while True:
        if pivots >= max_pivots:
            return z, MAX_PIVOTS, pivots
        col = T[:, entering]
        cand = np.flatnonzero(col > pivot_tol)
        if cand.size == 0:
            return z, RAY, pivots
        z0_rows = np.flatnonzero(basis == z0)
        r = _lex_row(T, cand, entering, n, int(z0_rows[0]) if z0_rows.size else -1, tie_tol)
        if r < 0:
            return z, DEGENERATE, pivots
        _pivot(T, r, entering)
        pivots += 1
        leaving = basis[r]
        basis[r] = entering
        if leaving == z0:
            for i in range(n):
                if n <= basis[i] < 2 * n:
                    z[basis[i] - n] = max(T[i, -1], 0.0)
            return z, SOLVED, pivots
        entering = leaving + n if leaving < n else leaving - n
