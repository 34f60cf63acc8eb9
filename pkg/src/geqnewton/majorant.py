"""Scalar majorant functions and the Newton sequence they generate.

A majorant function ``psi`` on ``[0, R)`` bounds the behaviour of the vector
Newton iteration: its smallest root ``t_star`` is the radius of the
existence/uniqueness ball and the scalar Newton iterates ``t_k`` started at 0
give a-priori error envelopes ``t_star - t_k``.

Two closed-form families are provided (Lipschitz-quadratic and Smale-analytic)
plus a custom kind built from user evaluators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from geqnewton.errors import DomainError, NoCertificateError, ParameterError

LIPSCHITZ = "lipschitz"
SMALE = "smale"
CUSTOM = "custom"

#: Upper limit on ``b * gamma`` for the Smale preset.
SMALE_BOUND = 3.0 - 2.0 * math.sqrt(2.0)

H1_TOL = 1e-12
H2_GRID = 1024
OVERSHOOT_RTOL = 1e-12


@dataclass(frozen=True)
class MajorantFunction:
    """Immutable scalar majorant ``psi`` with its first two derivatives.

    Use :func:`make_lipschitz`, :func:`make_smale` or :func:`make_custom`
    rather than the constructor.
    """

    kind: str
    b: float
    lam: float
    domain_r: float
    K: Optional[float] = None
    gamma: Optional[float] = None
    _psi: Callable[[float], float] = field(default=None, repr=False, compare=False)
    _dpsi: Callable[[float], float] = field(default=None, repr=False, compare=False)
    _d2psi: Callable[[float], float] = field(default=None, repr=False, compare=False)

    def psi(self, t):
        return self._psi(t)

    def dpsi(self, t):
        return self._dpsi(t)

    def d2psi(self, t):
        return self._d2psi(t)

    def linearization_error(self, t, u):
        """``psi(u) - [psi(t) + psi'(t)(u - t)]``."""
        return self.psi(u) - (self.psi(t) + self.dpsi(t) * (u - t))

    @property
    def scale(self):
        return max(1.0, self.b)


@dataclass(frozen=True)
class ScalarTrace:
    t: tuple
    t_star: float
    converged: bool
    residuals: tuple


@dataclass(frozen=True)
class HConditionsReport:
    h1: bool
    h2: bool
    h3: bool
    h4: bool
    kantorovich_ok: bool
    t_star: Optional[float]
    diagnostics: dict
    h2_provenance: str = "analytic"

    @property
    def ok(self):
        return self.h1 and self.h2 and self.h3


@dataclass(frozen=True)
class RateConstants:
    linear: float
    quadratic: Optional[float]


def _require_positive(**params):
    for name, value in params.items():
        if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
            raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


def make_lipschitz(K, b, lam=1.0):
    """Quadratic majorant ``(K/2) t^2 - t + b`` on ``[0, 1/K)``."""
    _require_positive(K=K, b=b, lam=lam)
    K, b, lam = float(K), float(b), float(lam)
    return MajorantFunction(
        kind=LIPSCHITZ, b=b, lam=lam, domain_r=1.0 / K, K=K,
        _psi=lambda t: 0.5 * K * t * t - t + b,
        _dpsi=lambda t: K * t - 1.0,
        _d2psi=lambda t: K,
    )


def make_smale(gamma, b, lam=1.0):
    """Analytic majorant ``t/(1 - gamma t) - 2t + b`` on ``[0, 1/gamma)``."""
    _require_positive(gamma=gamma, b=b, lam=lam)
    g, b, lam = float(gamma), float(b), float(lam)
    return MajorantFunction(
        kind=SMALE, b=b, lam=lam, domain_r=1.0 / g, gamma=g,
        _psi=lambda t: t / (1.0 - g * t) - 2.0 * t + b,
        _dpsi=lambda t: 1.0 / (1.0 - g * t) ** 2 - 2.0,
        _d2psi=lambda t: 2.0 * g / (1.0 - g * t) ** 3,
    )


def make_custom(psi, dpsi, d2psi, domain_r, lam=1.0):
    """Wrap user evaluators; ``psi(0) > 0`` and ``psi'(0) = -1`` are enforced."""
    _require_positive(domain_r=domain_r, lam=lam)
    b = float(psi(0.0))
    if not b > 0:
        raise ParameterError(f"custom majorant needs psi(0) > 0, got {b!r}")
    if abs(dpsi(0.0) + 1.0) > H1_TOL:
        raise ParameterError(f"custom majorant needs psi'(0) = -1, got {dpsi(0.0)!r}")
    return MajorantFunction(
        kind=CUSTOM, b=b, lam=float(lam), domain_r=float(domain_r),
        _psi=psi, _dpsi=dpsi, _d2psi=d2psi,
    )


def kantorovich_condition(psi):
    """Human-readable preset existence condition."""
    if psi.kind == LIPSCHITZ:
        return "bK ≤ 1/2"
    if psi.kind == SMALE:
        return "bγ ≤ 3-2√2"
    return "psi(t) = 0 for some t in (0, R)"


def _preset_product(psi):
    if psi.kind == LIPSCHITZ:
        return psi.b * psi.K, 0.5
    return psi.b * psi.gamma, SMALE_BOUND


def smallest_root(psi):
    """Smallest zero ``t_star`` of ``psi`` in ``[0, R)``.

    Presets use the numerically stable rewrite of the quadratic formula.
    The Lipschitz boundary case ``bK = 1/2`` returns the double root ``1/K``.
    """
    if psi.kind == LIPSCHITZ:
        prod, bound = _preset_product(psi)
        if prod > bound:
            raise NoCertificateError(
                f"bK ≤ 1/2 violated (bK = {prod:.17g})", condition="bK ≤ 1/2")
        disc = max(1.0 - 2.0 * prod, 0.0)
        return 2.0 * psi.b / (1.0 + math.sqrt(disc))
    if psi.kind == SMALE:
        prod, bound = _preset_product(psi)
        if prod > bound:
            raise NoCertificateError(
                f"bγ ≤ 3-2√2 violated (bγ = {prod:.17g})",
                condition="bγ ≤ 3-2√2")
        # (p + 1)^2 - 8p factored through its roots 3 -+ 2*sqrt(2): exact zero at the boundary
        disc = max((SMALE_BOUND - prod) * (3.0 + 2.0 * math.sqrt(2.0) - prod), 0.0)
        return 2.0 * psi.b / (prod + 1.0 + math.sqrt(disc))
    return _custom_root(psi)


def _custom_root(psi, max_iter=500):
    tol = 1e-14 * psi.scale
    R = psi.domain_r
    t = 0.0
    for _ in range(max_iter):
        val = psi.psi(t)
        if abs(val) <= tol:
            return t
        d = psi.dpsi(t)
        if not d < 0:
            break
        t_next = t - val / d
        if not (t_next < R) or t_next <= t:
            break
        t = t_next
    return _bisect_first_root(psi, t)


def _bisect_first_root(psi, start):
    """Bracket the first sign change of ``psi`` right of ``start`` and bisect."""
    R = psi.domain_r
    grid = np.linspace(start, R, H2_GRID + 1)[:-1]
    lo = start
    hi = None
    for s in grid[1:]:
        if psi.psi(s) <= 0:
            hi = s
            break
        lo = s
    if hi is None:
        raise NoCertificateError(
            "psi has no zero in [0, R): h3 violated",
            condition="psi(t) = 0 for some t in (0, R)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if psi.psi(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi if abs(psi.psi(hi)) <= abs(psi.psi(lo)) else lo


def newton_map(psi, t, t_star=None):
    """One scalar Newton step ``t - psi(t)/psi'(t)``, valid on ``[0, t_star)``."""
    if t_star is None:
        t_star = smallest_root(psi)
    if not (0.0 <= t < t_star):
        raise DomainError(f"newton_map needs 0 <= t < t_star = {t_star!r}, got t = {t!r}")
    d = psi.dpsi(t)
    if not d < 0:
        raise DomainError(f"psi'({t!r}) = {d!r} is not negative")
    return t - psi.psi(t) / d


def scalar_sequence(psi, max_iter=100, tol=1e-12):
    """Run ``t_{k+1} = n_psi(t_k)`` from 0 until ``t_star - t_k <= tol``.

    A step that rounding pushes just past ``t_star`` is clamped to ``t_star``;
    a step that fails to advance ends the run, which is reported converged.
    """
    t_star = smallest_root(psi)
    t = [0.0]
    res = [psi.psi(0.0)]
    converged = t_star - t[-1] <= tol
    while not converged and len(t) <= max_iter:
        nxt = t[-1] - psi.psi(t[-1]) / psi.dpsi(t[-1])
        if not nxt > t[-1]:
            converged = True
            break
        if nxt >= t_star:
            if nxt - t_star > OVERSHOOT_RTOL * max(1.0, t_star):
                converged = True
                break
            nxt = t_star
        t.append(nxt)
        res.append(psi.psi(nxt))
        converged = t_star - nxt <= tol
    return ScalarTrace(t=tuple(t), t_star=t_star, converged=converged, residuals=tuple(res))


def _h4(psi, t_star):
    if psi.kind in (LIPSCHITZ, SMALE):
        prod, bound = _preset_product(psi)
        return prod < bound
    # psi'(t*) < 0 iff psi changes sign after t*; the sampled sign test guards
    # against a tiny negative derivative left over at a double root.
    if not psi.dpsi(t_star) < 0:
        return False
    R = psi.domain_r
    grid = np.linspace(t_star, R, H2_GRID + 1)[1:-1]
    return any(psi.psi(s) < 0 for s in grid)


def rate_constants(psi):
    """Linear factor 1/2 and, when h4 holds, ``psi''(t*) / (-2 psi'(t*))``."""
    t_star = smallest_root(psi)
    quad = None
    if _h4(psi, t_star):
        quad = psi.d2psi(t_star) / (-2.0 * psi.dpsi(t_star))
    return RateConstants(linear=0.5, quadratic=quad)


def smale_quadratic_constant(gamma, t_star):
    """Closed-form quadratic rate constant of the Smale preset."""
    s = 1.0 - gamma * t_star
    return gamma / (s * (2.0 * s * s - 1.0))


def check_conditions(psi):
    """Evaluate hypotheses h1-h4 and the preset existence inequality."""
    diag = {}
    if psi.kind in (LIPSCHITZ, SMALE):
        prod, bound = _preset_product(psi)
        name = "bK" if psi.kind == LIPSCHITZ else "bγ"
        cond = kantorovich_condition(psi)
        h3 = prod <= bound
        h4 = prod < bound
        diag["h1"] = f"psi(0) = b = {psi.b:.17g} > 0 and psi'(0) = -1 by construction"
        diag["h2"] = "psi' convex and strictly increasing (closed form)"
        if h3:
            diag["h3"] = f"{name} = {prod:.17g} satisfies {cond}"
        else:
            diag["h3"] = f"{cond} violated: {name} = {prod:.17g}"
        if h4:
            diag["h4"] = "psi'(t*) < 0"
        elif h3:
            diag["h4"] = "psi'(t*) = 0 (double root); only the linear rate holds"
        else:
            diag["h4"] = "not applicable: psi has no zero"
        t_star = smallest_root(psi) if h3 else None
        return HConditionsReport(h1=True, h2=True, h3=h3, h4=h4, kantorovich_ok=h3,
                                 t_star=t_star, diagnostics=diag)

    p0, d0 = psi.psi(0.0), psi.dpsi(0.0)
    h1 = p0 > 0 and abs(d0 + 1.0) <= H1_TOL
    diag["h1"] = f"psi(0) = {p0:.17g}, psi'(0) = {d0:.17g}"
    grid = np.linspace(0.0, 0.999 * psi.domain_r, H2_GRID)
    second = np.array([psi.d2psi(s) for s in grid])
    increasing = bool(np.all(second > 0))
    convex = bool(np.all(np.diff(second) >= -1e-12 * np.maximum(1.0, np.abs(second[:-1]))))
    h2 = increasing and convex
    diag["h2"] = (f"sampled on {H2_GRID} points: psi'' > 0 {'holds' if increasing else 'fails'}, "
                  f"psi'' nondecreasing {'holds' if convex else 'fails'}")
    t_star = None
    h3 = h4 = False
    if h1 and h2:
        try:
            t_star = smallest_root(psi)
        except NoCertificateError as exc:
            diag["h3"] = str(exc)
        else:
            h3 = True
            diag["h3"] = f"t* = {t_star:.17g}"
            h4 = _h4(psi, t_star)
            diag["h4"] = f"psi'(t*) = {psi.dpsi(t_star):.17g}"
    else:
        diag["h3"] = "not evaluated: h1 or h2 fails"
    return HConditionsReport(h1=h1, h2=h2, h3=h3, h4=h4, kantorovich_ok=h3, t_star=t_star,
                             diagnostics=diag, h2_provenance="sampled")


def require_certifiable(psi):
    """Raise :class:`NoCertificateError` naming the first failed hypothesis."""
    report = check_conditions(psi)
    if not report.h1:
        raise NoCertificateError("h1 violated: " + report.diagnostics["h1"], condition="h1")
    if not report.h2:
        raise NoCertificateError("h2 violated: " + report.diagnostics["h2"], condition="h2")
    if not report.h3:
        raise NoCertificateError(report.diagnostics["h3"], condition=kantorovich_condition(psi))
    return report
