"""Problem model for ``0 in f(x) + N_B(x)`` with ``B`` a box.

Norms are the vector infinity-norm and the induced matrix infinity-norm
(maximum absolute row sum) throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from geqnewton.errors import ParameterError, RegularityError, SingularMatrixError


def vec_norm(v):
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def mat_norm(A):
    A = np.asarray(A, dtype=float)
    return float(np.max(np.sum(np.abs(A), axis=1))) if A.size else 0.0


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with IEEE infinities for missing bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        up = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != up.shape:
            raise ParameterError(f"box bounds have lengths {lo.size} and {up.size}")
        for i, (a, b) in enumerate(zip(lo, up)):
            if math.isnan(a) or math.isnan(b):
                raise ParameterError(f"box component {i} has a NaN bound")
            if a > b:
                raise ParameterError(f"box component {i}: lower {a!r} > upper {b!r}")
            if a == math.inf or b == -math.inf:
                raise ParameterError(f"box component {i} is empty ([{a!r}, {b!r}])")
        lo.flags.writeable = False
        up.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def free(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @classmethod
    def nonnegative(cls, n):
        return cls(np.zeros(n), np.full(n, np.inf))

    @property
    def dim(self):
        return self.lower.size

    @property
    def free_mask(self):
        return np.isneginf(self.lower) & np.isposinf(self.upper)

    @property
    def is_free(self):
        return bool(np.all(self.free_mask))

    def shifted(self, x):
        """The box ``B - x``."""
        return Box(self.lower - x, self.upper - x)


def project_box(box, v):
    """Euclidean projection onto ``box`` (componentwise clamp)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (box.dim,):
        raise ParameterError(f"vector of shape {v.shape} does not match box dimension {box.dim}")
    return np.minimum(np.maximum(v, box.lower), box.upper)


@dataclass(frozen=True)
class SmoothMap:
    """Square smooth map ``f: R^n -> R^n`` with its Jacobian.

    ``name`` is the builtin family (or ``"external"``) and ``params`` the
    family parameters needed to rebuild it. ``second`` optionally evaluates
    the second derivative as an ``(n, n, n)`` array.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    name: str = "external"
    params: dict = field(default_factory=dict)
    second: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return np.asarray(self.evaluate(np.asarray(x, dtype=float)), dtype=float).reshape(self.dim)

    def jac(self, x):
        return np.asarray(self.jacobian(np.asarray(x, dtype=float)), dtype=float).reshape(self.dim, self.dim)


def _poly_derivs(coeffs):
    c = np.polynomial.polynomial
    c1 = c.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)
    c2 = c.polyder(c1) if len(c1) > 1 else np.zeros(1)
    return c1, c2


def poly1d(coefficients):
    """Scalar polynomial ``sum_j c_j x^j`` (coefficients in ascending order)."""
    coeffs = np.asarray(coefficients, dtype=float).reshape(-1)
    if coeffs.size == 0:
        raise ParameterError("poly1d needs at least one coefficient")
    c1, c2 = _poly_derivs(coeffs)
    pv = np.polynomial.polynomial.polyval
    return SmoothMap(
        dim=1,
        evaluate=lambda x: np.array([pv(x[0], coeffs)]),
        jacobian=lambda x: np.array([[pv(x[0], c1)]]),
        name="poly1d",
        params={"coefficients": coeffs.tolist()},
        second=lambda x: np.array([[[pv(x[0], c2)]]]),
    )


def ncp_poly(coefficients, coupling=None):
    """Componentwise polynomial map ``f_i(x) = p_i(x_i) + (C x)_i``.

    ``coefficients`` is a list of ascending coefficient lists, one per
    component; ``coupling`` is an optional ``n x n`` matrix ``C``.
    """
    polys = [np.asarray(c, dtype=float).reshape(-1) for c in coefficients]
    n = len(polys)
    if n == 0 or any(p.size == 0 for p in polys):
        raise ParameterError("ncp_poly needs a nonempty coefficient list per component")
    C = np.zeros((n, n)) if coupling is None else np.asarray(coupling, dtype=float)
    if C.shape != (n, n):
        raise ParameterError(f"coupling matrix has shape {C.shape}, expected {(n, n)}")
    derivs = [_poly_derivs(p) for p in polys]
    pv = np.polynomial.polynomial.polyval

    def evaluate(x):
        return np.array([pv(x[i], polys[i]) for i in range(n)]) + C @ x

    def jacobian(x):
        return C + np.diag([pv(x[i], derivs[i][0]) for i in range(n)])

    def second(x):
        H = np.zeros((n, n, n))
        for i in range(n):
            H[i, i, i] = pv(x[i], derivs[i][1])
        return H

    params = {"coefficients": [p.tolist() for p in polys]}
    if coupling is not None:
        params["coupling"] = C.tolist()
    return SmoothMap(dim=n, evaluate=evaluate, jacobian=jacobian, name="ncp_poly",
                     params=params, second=second)


def qp_kkt(Q, c, A, b):
    """KKT map of ``min 1/2 x'Qx + c'x  s.t.  Ax <= b`` in variables ``(x, mu)``.

    The map is ``(Qx + c + A'mu, b - Ax)``; pair it with :func:`qp_kkt_box`.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    n, m = c.size, b.size
    if Q.shape != (n, n) or A.shape != (m, n):
        raise ParameterError(f"qp_kkt shapes: Q {Q.shape}, c {c.shape}, A {A.shape}, b {b.shape}")
    J = np.block([[Q, A.T], [-A, np.zeros((m, m))]])
    J.flags.writeable = False
    shift = np.concatenate([c, b])

    return SmoothMap(
        dim=n + m,
        evaluate=lambda z: J @ z + shift,
        jacobian=lambda z: J.copy(),
        name="qp_kkt",
        params={"Q": Q.tolist(), "c": c.tolist(), "A": A.tolist(), "b": b.tolist()},
        second=lambda z: np.zeros((n + m, n + m, n + m)),
    )


def qp_kkt_box(n, m):
    return Box(np.concatenate([np.full(n, -np.inf), np.zeros(m)]), np.full(n + m, np.inf))


@dataclass(frozen=True)
class GEProblem:
    """Generalized equation ``0 in f(x) + N_B(x)`` with starting point and moduli."""

    map: SmoothMap
    box: Box
    x0: np.ndarray
    lam: float
    lip_K: Optional[float] = None
    smale_gamma: Optional[float] = None
    b_override: Optional[float] = None
    lam_computed: bool = False

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.size != self.map.dim or self.box.dim != self.map.dim:
            raise ParameterError(
                f"dimension mismatch: map {self.map.dim}, box {self.box.dim}, x0 {x0.size}")
        if not np.all(np.isfinite(x0)):
            raise ParameterError("x0 must be finite")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ParameterError(f"lambda must be positive, got {self.lam!r}")
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self):
        return self.map.dim


def make_problem(smooth_map, box, x0, lam=None, **kwargs):
    """Build a :class:`GEProblem`, computing ``lam`` when the box is all-free."""
    computed = False
    if lam is None:
        if not box.is_free:
            raise ParameterError("lambda must be supplied when the box has finite bounds")
        lam = regularity_modulus_smooth(smooth_map.jac(np.asarray(x0, dtype=float)))
        computed = True
    return GEProblem(map=smooth_map, box=box, x0=x0, lam=float(lam), lam_computed=computed, **kwargs)


def natural_residual(problem, x):
    """``||x - P_B(x - f(x))||_inf``; zero exactly at solutions."""
    x = np.asarray(x, dtype=float)
    return vec_norm(x - project_box(problem.box, x - problem.map(x)))


def linearization_error(smooth_map, x, y):
    """``f(y) - [f(x) + f'(x)(y - x)]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return smooth_map(y) - (smooth_map(x) + smooth_map.jac(x) @ (y - x))


def regularity_modulus_smooth(J0):
    """``||J0^{-1}||_inf`` for the all-free box."""
    from geqnewton.avi import lu_factor

    J0 = np.atleast_2d(np.asarray(J0, dtype=float))
    try:
        fac = lu_factor(J0)
    except SingularMatrixError as exc:
        raise RegularityError(f"Jacobian at x0 is singular: {exc}") from exc
    inv = fac.solve_many(np.eye(J0.shape[0]))
    return mat_norm(inv)


@dataclass(frozen=True)
class MajorantCheckReport:
    samples: int
    passed: int
    worst_margin: float
    seed: int
    radius: float

    @property
    def ok(self):
        return self.passed == self.samples


def _unit_inf_direction(rng, n):
    d = rng.uniform(-1.0, 1.0, size=n)
    d[rng.integers(n)] = rng.choice([-1.0, 1.0])
    return d / np.max(np.abs(d))


def verify_majorant_condition(problem, psi, samples=2048, seed=0, radius=None):
    """Sample the majorant condition on the Jacobian.

    Draws pairs ``(x, y)`` with ``||y - x|| + ||x - x0|| < R`` and checks
    ``lam ||f'(y) - f'(x)|| <= psi'(||y-x|| + ||x-x0||) - psi'(||x-x0||)``.
    A relative slack of 1e-12 absorbs rounding when the condition is tight.
    ``worst_margin`` is the smallest right-minus-left difference seen.
    """
    R = psi.domain_r if radius is None else min(radius, psi.domain_r)
    rng = np.random.default_rng(seed)
    n = problem.dim
    x0 = problem.x0
    passed = 0
    worst = math.inf
    for _ in range(samples):
        total = rng.uniform(0.0, R) * (1.0 - 1e-12)
        r1 = rng.uniform(0.0, total)
        r2 = total - r1
        x = x0 + r1 * _unit_inf_direction(rng, n)
        y = x + r2 * _unit_inf_direction(rng, n)
        a = vec_norm(x - x0)
        s = vec_norm(y - x)
        if s + a >= R:
            continue
        lhs = problem.lam * mat_norm(problem.map.jac(y) - problem.map.jac(x))
        rhs = psi.dpsi(s + a) - psi.dpsi(a)
        margin = rhs - lhs
        worst = min(worst, margin)
        if margin >= -1e-12 * max(1.0, abs(rhs)):
            passed += 1
    return MajorantCheckReport(samples=samples, passed=passed, worst_margin=worst, seed=seed, radius=R)


def poly1d_smale_gamma(coefficients, x0, lam):
    """``sup_{n>1} |lam p^(n)(x0) / n!|^(1/(n-1))`` for a scalar polynomial.

    Finite because the polynomial has finitely many nonzero derivatives.
    """
    coeffs = np.asarray(coefficients, dtype=float).reshape(-1)
    P = np.polynomial.Polynomial(coeffs)
    best = 0.0
    for k in range(2, coeffs.size):
        val = abs(lam * P.deriv(k)(x0) / math.factorial(k))
        if val > 0:
            best = max(best, val ** (1.0 / (k - 1)))
    return best


def analytic_second_derivative_bound(gamma, r):
    """``2 gamma / (1 - gamma r)^3`` bound on ``lam ||f''||`` at distance ``r`` from x0."""
    return 2.0 * gamma / (1.0 - gamma * r) ** 3


def check_jacobian(smooth_map, x, rtol=1e-5, h=None):
    """Compare the Jacobian with central differences; return the max relative error."""
    x = np.asarray(x, dtype=float)
    n = smooth_map.dim
    J = smooth_map.jac(x)
    fd = np.empty((n, n))
    for j in range(n):
        step = (h if h is not None else 1e-6 * max(1.0, abs(x[j])))
        e = np.zeros(n)
        e[j] = step
        fd[:, j] = (smooth_map(x + e) - smooth_map(x - e)) / (2 * step)
    err = np.max(np.abs(J - fd)) / max(1.0, np.max(np.abs(J)))
    return float(err)
