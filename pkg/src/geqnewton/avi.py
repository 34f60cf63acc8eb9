"""Affine subproblems: dense LU, Lemke pivoting and box reduction.

The Newton subproblem ``0 in c + J y + N_B(y)`` is reduced to a linear system
(all-free box) or a standard LCP. Free coordinates are eliminated with a Schur
complement, one-sided bounds become sign-adjusted shifts and two-sided bounds
use the doubling transformation.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from geqnewton import kernels
from geqnewton.errors import ParameterError, SingularMatrixError, SubproblemError
from geqnewton.geqn import Box, mat_norm, project_box, vec_norm

SINGULAR_RTOL = 1e-13
ENUMERATE_MAX_DIM = 20


class AviStatus(str, enum.Enum):
    SOLVED = "Solved"
    RAY_TERMINATION = "RayTermination"
    SINGULAR = "Singular"
    MAX_PIVOTS = "MaxPivots"


_KERNEL_STATUS = {
    kernels.SOLVED: AviStatus.SOLVED,
    kernels.RAY: AviStatus.RAY_TERMINATION,
    kernels.DEGENERATE: AviStatus.SINGULAR,
    kernels.MAX_PIVOTS: AviStatus.MAX_PIVOTS,
}


@dataclass(frozen=True)
class AviSolution:
    """Result of :func:`lemke` or :func:`solve_affine_ge`.

    For an LCP, ``y`` is ``z`` and ``w = Mz + q``. For a box subproblem
    ``w`` holds ``c + J y`` and ``complementarity_residual`` is the
    natural-map residual of the affine problem.
    """

    y: np.ndarray
    status: AviStatus
    pivots: int
    complementarity_residual: float
    w: np.ndarray = None

    @property
    def solved(self):
        return self.status is AviStatus.SOLVED


class LUFactorization:
    """Partial-pivoting LU factors of a square matrix."""

    def __init__(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ParameterError(f"LU needs a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ParameterError("matrix has non-finite entries")
        self.n = A.shape[0]
        tol = SINGULAR_RTOL * mat_norm(A)
        self.lu, self.perm, info = kernels.lu_factor(A, tol)
        if info:
            raise SingularMatrixError(f"pivot in column {info - 1} below {tol:.3g}")

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float).reshape(-1)
        if rhs.size != self.n:
            raise ParameterError(f"right-hand side has length {rhs.size}, expected {self.n}")
        return kernels.lu_solve(self.lu, self.perm, rhs)

    def solve_many(self, B):
        B = np.asarray(B, dtype=float).reshape(self.n, -1)
        return np.column_stack([self.solve(B[:, j]) for j in range(B.shape[1])]) if B.shape[1] else B.copy()


def lu_factor(A):
    return LUFactorization(A)


def lu_solve(A, rhs):
    """Solve ``A x = rhs``; raises :class:`SingularMatrixError` on a tiny pivot."""
    return LUFactorization(A).solve(rhs)


def _lcp_residual(z, w):
    return float(np.max(np.abs(np.minimum(z, w)))) if z.size else 0.0


def lemke(M, q, max_pivots=None):
    """Solve ``LCP(M, q)`` by Lemke's method (covering vector of ones)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.asarray(q, dtype=float).reshape(-1)
    n = q.size
    if M.shape != (n, n):
        raise ParameterError(f"LCP shapes disagree: M {M.shape}, q {q.shape}")
    if max_pivots is None:
        max_pivots = 50 * max(n, 1)
    z, code, pivots = kernels.lemke(M, q, int(max_pivots))
    z = np.asarray(z)
    w = M @ z + q
    return AviSolution(y=z, status=_KERNEL_STATUS[code], pivots=int(pivots),
                       complementarity_residual=_lcp_residual(z, w), w=w)


def lcp_enumerate(M, q, tol=1e-9, dedup_tol=1e-8):
    """All solutions of ``LCP(M, q)`` found on complementary bases.

    Tries all ``2^n`` index sets ``S`` (``z_S`` basic, ``w`` basic elsewhere),
    solving each induced system with numpy. Independent of :func:`lemke`.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.asarray(q, dtype=float).reshape(-1)
    n = q.size
    if n > ENUMERATE_MAX_DIM:
        raise ParameterError(f"enumeration limited to n <= {ENUMERATE_MAX_DIM}, got {n}")
    found = []
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            S = list(S)
            z = np.zeros(n)
            if S:
                try:
                    z[S] = np.linalg.solve(M[np.ix_(S, S)], -q[S])
                except np.linalg.LinAlgError:
                    continue
            w = M @ z + q
            scale = 1.0 + vec_norm(q)
            if S and vec_norm(w[S]) > tol * scale:
                continue
            if np.min(z, initial=0.0) < -tol or np.min(w, initial=0.0) < -tol * scale:
                continue
            if any(vec_norm(z - s) <= dedup_tol for s in found):
                continue
            found.append(z)
    return found


def _affine_residual(J, c, box, y):
    return vec_norm(y - project_box(box, y - (c + J @ y)))


def solve_affine_ge(J, c, box, max_pivots=None):
    """Solve ``0 in c + J y + N_B(y)`` for ``y``.

    Raises :class:`SubproblemError` (with ``status``) when the free block is
    singular or Lemke fails.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    if J.shape != (n, n) or box.dim != n:
        raise ParameterError(f"shapes disagree: J {J.shape}, c {c.shape}, box {box.dim}")
    lo, up = box.lower, box.upper
    fixed = lo == up
    free = box.free_mask
    bnd = ~(free | fixed)
    F, X, B = np.flatnonzero(free), np.flatnonzero(fixed), np.flatnonzero(bnd)

    y = np.empty(n)
    y[X] = lo[X]
    c_eff = c + J[:, X] @ y[X]
    cF, cB = c_eff[F], c_eff[B]
    JFF, JFB = J[np.ix_(F, F)], J[np.ix_(F, B)]
    JBF, JBB = J[np.ix_(B, F)], J[np.ix_(B, B)]

    fac = None
    if F.size:
        try:
            fac = LUFactorization(JFF)
        except SingularMatrixError as exc:
            raise SubproblemError(f"free-free block of the Jacobian is singular: {exc}",
                                  status=AviStatus.SINGULAR) from exc

    pivots = 0
    if B.size:
        if fac is not None:
            S = JBB - JBF @ fac.solve_many(JFB)
            cs = cB - JBF @ fac.solve(cF)
        else:
            S, cs = JBB, cB
        yB, pivots = _solve_box_lcp(S, cs, lo[B], up[B], max_pivots)
        y[B] = yB
    if F.size:
        y[F] = fac.solve(-(cF + JFB @ y[B]))

    w = c + J @ y
    return AviSolution(y=y, status=AviStatus.SOLVED, pivots=pivots,
                       complementarity_residual=_affine_residual(J, c, box, y), w=w)


def _solve_box_lcp(S, c, lo, up, max_pivots):
    """Box-constrained affine problem on bounded coordinates, via one LCP."""
    m = c.size
    has_lo = np.isfinite(lo)
    D = np.where(has_lo, 1.0, -1.0)
    anchor = np.where(has_lo, lo, up)
    two = np.flatnonzero(has_lo & np.isfinite(up))
    t = two.size
    DSD = D[:, None] * S * D[None, :]
    E = np.zeros((m, t))
    E[two, np.arange(t)] = 1.0
    M = np.block([[DSD, E], [-E.T, np.zeros((t, t))]])
    q = np.concatenate([D * (c + S @ anchor), up[two] - lo[two]])
    if max_pivots is None:
        max_pivots = 50 * (m + t)
    sol = lemke(M, q, max_pivots)
    if not sol.solved:
        raise SubproblemError(f"Lemke stopped with {sol.status.value} after {sol.pivots} pivots",
                              status=sol.status)
    z = sol.y[:m]
    return anchor + D * z, sol.pivots
