"""Josephy-Newton outer iteration and a-posteriori certification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from geqnewton import majorant
from geqnewton.avi import solve_affine_ge
from geqnewton.errors import InsufficientDataError, ParameterError, SubproblemError
from geqnewton.geqn import natural_residual, project_box, vec_norm

EPS = np.finfo(float).eps


class Outcome(str, enum.Enum):
    CONVERGED = "Converged"
    STALLED = "Stalled"
    MAX_ITER = "MaxIter"
    SUBPROBLEM_FAILURE = "SubproblemFailure"


@dataclass(frozen=True)
class SolverOptions:
    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    max_iter: int = 50
    sub_max_pivots: Optional[int] = None

    def __post_init__(self):
        if not (self.tol_residual > 0 and self.tol_step > 0):
            raise ParameterError("tolerances must be positive")
        if self.max_iter < 0:
            raise ParameterError("max_iter must be nonnegative")


@dataclass(frozen=True)
class SubStats:
    status: str
    pivots: int
    affine_residual: float


@dataclass(frozen=True)
class IterationHistory:
    """Iterates ``x_0..x_m`` and per-step data (``steps[k] = ||x_{k+1} - x_k||``).

    ``residuals[k]`` is the natural residual at ``x_k`` (one per iterate);
    ``dist_to_x1[k]`` is ``||x_{k+1} - x_1||``.
    """

    iterates: tuple
    steps: tuple
    residuals: tuple
    sub_stats: tuple
    dist_to_x1: tuple
    outcome: Outcome
    message: str = ""

    @property
    def x_final(self):
        return self.iterates[-1]


def josephy_newton(problem, opts=None):
    """Solve ``0 in f(x) + N_B(x)`` from ``problem.x0``.

    Each step solves the partial linearization in the step variable
    ``d = x - x_k`` over the shifted box ``B - x_k``, so with an all-free box
    the update is exactly ``x_k - f'(x_k)^{-1} f(x_k)``.
    """
    opts = opts or SolverOptions()
    x = problem.x0.copy()
    iterates = [x]
    steps, stats, dist = [], [], []
    residuals = [natural_residual(problem, x)]
    outcome, message = Outcome.MAX_ITER, ""
    if residuals[0] <= opts.tol_residual:
        outcome = Outcome.CONVERGED
    else:
        for k in range(opts.max_iter):
            try:
                sol = solve_affine_ge(problem.map.jac(x), problem.map(x), problem.box.shifted(x),
                                      max_pivots=opts.sub_max_pivots)
            except SubproblemError as exc:
                exc.iteration = k
                outcome = Outcome.SUBPROBLEM_FAILURE
                message = f"iteration {k}: {exc}"
                break
            x_new = x + sol.y
            if not problem.box.is_free:
                x_new = project_box(problem.box, x_new)
            steps.append(vec_norm(x_new - x))
            stats.append(SubStats(sol.status.value, sol.pivots, sol.complementarity_residual))
            x = x_new
            iterates.append(x)
            dist.append(vec_norm(x - iterates[1]))
            residuals.append(natural_residual(problem, x))
            if residuals[-1] <= opts.tol_residual:
                outcome = Outcome.CONVERGED
                break
            if steps[-1] <= opts.tol_step:
                outcome = Outcome.STALLED
                message = f"step {steps[-1]:.3g} below tol_step with residual {residuals[-1]:.3g}"
                break
    return IterationHistory(iterates=tuple(iterates), steps=tuple(steps), residuals=tuple(residuals),
                            sub_stats=tuple(stats), dist_to_x1=tuple(dist), outcome=outcome,
                            message=message)


@dataclass(frozen=True)
class Certificate:
    """Majorant envelope confronted with the observed iterates.

    Bounds involving the solution use the final iterate as a proxy; the
    ``terminal_*`` fields are those proxy bounds.
    """

    t_star: float
    scalar_trace: majorant.ScalarTrace
    t_aligned: tuple
    b: float
    psi0: float
    initial_ok: bool
    condition_report: majorant.HConditionsReport
    rates: majorant.RateConstants
    step_bound_ok: tuple
    error_envelope: tuple
    terminal_errors: tuple
    terminal_bound_ok: tuple
    terminal_slack: tuple
    linear_rate_ok: bool
    quadratic_rate_ok: Optional[bool]
    uniqueness_radius: float
    assumptions: tuple
    majorant_check: object = None
    proxy: bool = True
    tol: float = 1e-9

    @property
    def ok(self):
        checks = [self.initial_ok, all(self.step_bound_ok), all(self.terminal_bound_ok)]
        if self.majorant_check is not None:
            checks.append(self.majorant_check.ok)
        return all(checks)


def _assumptions(problem, psi, t_star):
    out = []
    if problem.lam_computed:
        out.append(f"lambda = {problem.lam:.17g} computed as ||f'(x0)^-1||_inf (all-free box)")
    else:
        out.append(f"lambda = {problem.lam:.17g} is user-supplied; strong regularity of the "
                   "partial linearization at x1 with this modulus is assumed, not verified")
    if not problem.box.is_free:
        out.append("strong regularity of f(x0) + f'(x0)(x - x0) + N_B(x) at x1 for 0 is assumed")
    out.append(f"t* = {t_star:.17g} <= r_x0 is assumed (r_x0 not computable)")
    if psi.dpsi(t_star) < 0 or psi.kind != majorant.CUSTOM:
        lhs = psi.d2psi(t_star) * psi.psi(0.0) ** 2 / (2.0 * problem.lam)
        out.append(f"psi''(t*) psi(0)^2 / (2 lambda) = {lhs:.17g} < r_0 is assumed (r_0 not computable)")
    out.append("iterates are taken inside B(x1, r_x1); the selection radius r_x1 is not enforced")
    out.append("the majorant condition on f' is assumed unless a sampled check is attached")
    return tuple(out)


def certify(history, problem, psi, tol=1e-9, majorant_check=None):
    """Check the iterates of ``history`` against the envelope generated by ``psi``.

    Raises :class:`~geqnewton.errors.NoCertificateError` when h1-h3 fail.
    ``tol`` is the absolute slack allowed in every inequality.
    """
    iterates = [np.asarray(x) for x in history.iterates]
    if len(iterates) < 2:
        raise InsufficientDataError("certification needs at least two iterates")
    report = majorant.require_certifiable(psi)
    t_star = report.t_star
    m = len(iterates) - 1
    trace = majorant.scalar_sequence(psi, max_iter=m, tol=0.0)
    t = list(trace.t) + [t_star] * (m + 1 - len(trace.t))

    b = vec_norm(iterates[1] - iterates[0])
    psi0 = psi.psi(0.0)
    initial_ok = b <= psi0 + 1e-12 * max(1.0, psi0)

    steps = [vec_norm(iterates[k + 1] - iterates[k]) for k in range(m)]
    step_ok = tuple(steps[k] <= t[k + 1] - t[k] + tol for k in range(m))
    x_hat = iterates[-1]
    env = tuple(t_star - tk for tk in t)
    errs = tuple(vec_norm(x_hat - x) for x in iterates)
    term_ok = tuple(e <= v + tol for e, v in zip(errs, env))
    slack = tuple(v - e for e, v in zip(errs, env))

    floor = 100 * EPS * max(1.0, vec_norm(x_hat))
    linear_ok = all(errs[k + 1] <= 0.5 * errs[k] + tol for k in range(m) if errs[k] > floor)
    rates = majorant.rate_constants(psi)
    quad_ok = None
    if rates.quadratic is not None:
        quad_ok = all(errs[k + 1] / errs[k] ** 2 <= rates.quadratic + 1e-6
                      for k in range(m) if errs[k + 1] > floor)
    return Certificate(
        t_star=t_star, scalar_trace=trace, t_aligned=tuple(t), b=b, psi0=psi0, initial_ok=initial_ok,
        condition_report=report, rates=rates, step_bound_ok=step_ok, error_envelope=env,
        terminal_errors=errs, terminal_bound_ok=term_ok, terminal_slack=slack,
        linear_rate_ok=linear_ok, quadratic_rate_ok=quad_ok, uniqueness_radius=t_star,
        assumptions=_assumptions(problem, psi, t_star), majorant_check=majorant_check, tol=tol,
    )


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    quad_constant: Optional[float]


def estimate_order(history):
    """Empirical convergence order from the last usable error triple.

    Errors are ``e_k = ||x_k - x_final||``; a triple is usable when its errors
    are strictly decreasing and above 100 machine epsilons.
    """
    iterates = history.iterates if hasattr(history, "iterates") else history
    iterates = [np.asarray(x, dtype=float) for x in iterates]
    if len(iterates) < 4:
        raise InsufficientDataError(f"need at least 4 iterates, got {len(iterates)}")
    x_hat = iterates[-1]
    floor = 100 * EPS * max(1.0, vec_norm(x_hat))
    e = [vec_norm(x - x_hat) for x in iterates[:-1]]
    for k in range(len(e) - 1, 1, -1):
        a, b, c = e[k - 2], e[k - 1], e[k]
        if a > b > c > floor:
            order = math.log(c / b) / math.log(b / a)
            quad = c / b ** 2 if order >= 1.5 else None
            return OrderEstimate(order=order, quad_constant=quad)
    raise InsufficientDataError("no strictly decreasing error triple above the noise floor")
