"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math

import numpy as np
import pytest

from geqnewton import avi, driver, geqn, majorant
from geqnewton.driver import SolverOptions
from geqnewton.geqn import Box, vec_norm

from oracles import bisect_root, classical_newton

SEED = 20240601
N_LIPSCHITZ = 1000


def lipschitz_cases():
    rng = np.random.default_rng(SEED)
    K = 10.0 ** rng.uniform(-1.0, 1.0, N_LIPSCHITZ)
    p = rng.uniform(0.0, 0.5, N_LIPSCHITZ)
    p = np.clip(p, 1e-6, 0.5 - 1e-6)
    return [(float(k), float(q / k)) for k, q in zip(K, p)]


@pytest.fixture(scope="module")
def lipschitz_traces():
    out = []
    for K, b in lipschitz_cases():
        psi = majorant.make_lipschitz(K, b)
        out.append((K, b, psi, majorant.scalar_sequence(psi, max_iter=30, tol=1e-12)))
    return out


def test_criterion_01_closed_form_root(criterion, lipschitz_traces):
    worst_formula = worst_bisect = worst_gap = 0.0
    max_len = 0
    all_converged = True
    for K, b, psi, trace in lipschitz_traces:
        t_star = majorant.smallest_root(psi)
        formula = (1.0 - math.sqrt(1.0 - 2.0 * b * K)) / K
        oracle = bisect_root(psi.psi, 0.0, 1.0 / K)
        worst_formula = max(worst_formula, abs(t_star - formula) / formula)
        worst_bisect = max(worst_bisect, abs(t_star - oracle) / oracle)
        worst_gap = max(worst_gap, abs(trace.t[-1] - t_star))
        max_len = max(max_len, len(trace.t) - 1)
        all_converged &= trace.converged
    passed = (worst_formula <= 1e-12 and worst_bisect <= 1e-12 and worst_gap <= 1e-12
              and max_len <= 30 and all_converged)
    criterion(1, "closed-form t* and scalar convergence", passed,
              f"rel(formula)={worst_formula:.2e} rel(bisect)={worst_bisect:.2e} "
              f"final gap={worst_gap:.2e} max iters={max_len}")
    assert passed


def test_criterion_02_halving_law(criterion, lipschitz_traces):
    worst = -math.inf
    pairs = 0
    for _, _, _, trace in lipschitz_traces:
        ts = trace.t_star
        for a, c in zip(trace.t, trace.t[1:]):
            worst = max(worst, (ts - c) - 0.5 * (ts - a))
            pairs += 1
    passed = worst <= 1e-12
    criterion(2, "halving law t*-t_{k+1} <= (t*-t_k)/2", passed, f"pairs={pairs} worst excess={worst:.2e}")
    assert passed


def test_criterion_03_quadratic_envelope(criterion, lipschitz_traces):
    worst_env = -math.inf
    worst_c = 0.0
    used = 0
    for K, b, psi, trace in lipschitz_traces:
        if b * K > 0.45:
            continue
        used += 1
        ts = trace.t_star
        C = psi.d2psi(ts) / (-2.0 * psi.dpsi(ts))
        closed = K / (2.0 * math.sqrt(1.0 - 2.0 * b * K))
        worst_c = max(worst_c, abs(C - closed) / closed,
                      abs(majorant.rate_constants(psi).quadratic - closed) / closed)
        for a, c in zip(trace.t, trace.t[1:]):
            worst_env = max(worst_env, (ts - c) - C * (ts - a) ** 2)
    passed = worst_env <= 1e-10 and worst_c <= 1e-10
    criterion(3, "quadratic envelope and its constant", passed,
              f"cases={used} worst excess={worst_env:.2e} rel(C)={worst_c:.2e}")
    assert passed


def test_criterion_04_smale_preset(criterion):
    rng = np.random.default_rng(SEED + 4)
    gamma = 10.0 ** rng.uniform(-1.0, 1.0, 1000)
    p = np.clip(rng.uniform(0.0, majorant.SMALE_BOUND, 1000), 1e-6, majorant.SMALE_BOUND - 1e-6)
    worst = 0.0
    for g, q in zip(gamma, p):
        g, b = float(g), float(q / g)
        bg = b * g
        formula = (bg + 1.0 - math.sqrt((bg + 1.0) ** 2 - 8.0 * bg)) / (4.0 * g)
        t_star = majorant.smallest_root(majorant.make_smale(g, b))
        worst = max(worst, abs(t_star - formula) / formula)
    boundary = majorant.check_conditions(majorant.make_smale(1.0, majorant.SMALE_BOUND))
    passed = worst <= 1e-10 and boundary.h4 is False
    criterion(4, "Smale preset root and h4 at the boundary", passed,
              f"rel={worst:.2e} h4(boundary)={boundary.h4}")
    assert passed


def sqrt2_problem(K=2.0 / 3.0):
    p = geqn.make_problem(geqn.poly1d([-2.0, 0.0, 1.0]), Box.free(1), [1.5], lam=1.0 / 3.0)
    return p, majorant.make_lipschitz(K, 1.0 / 12.0, lam=1.0 / 3.0)


def test_criterion_05_sqrt2_tightness(criterion):
    problem, psi = sqrt2_problem()
    history = driver.josephy_newton(problem, SolverOptions(tol_residual=1e-12))
    b = vec_norm(history.iterates[1] - history.iterates[0])
    cert = driver.certify(history, problem, psi)
    order = driver.estimate_order(history).order
    t_exact = 1.5 - math.sqrt(2.0)
    checks = {
        "b": abs(b - 1.0 / 12.0) <= 1e-15,
        "t*": abs(cert.t_star - t_exact) <= 1e-15,
        "tight": abs(abs(math.sqrt(2.0) - 1.5) - cert.t_star) <= 1e-15,
        "slack": abs(cert.terminal_slack[0]) <= 1e-10,
        "steps": all(cert.step_bound_ok),
        "order": 1.8 <= order <= 2.2,
        "certified": cert.ok,
    }
    passed = all(checks.values())
    criterion(5, "sqrt(2) end-to-end tightness", passed,
              f"b={b:.17g} slack0={cert.terminal_slack[0]:.2e} order={order:.3f} "
              f"failed={[k for k, v in checks.items() if not v]}")
    assert passed


def test_criterion_06_lemke_vs_enumeration(criterion):
    rng = np.random.default_rng(SEED + 6)
    worst_match = worst_comp = 0.0
    bad = 0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        A = rng.normal(size=(n, n))
        M = A @ A.T + 0.1 * np.eye(n)
        q = rng.normal(size=n) * 3
        sol = avi.lemke(M, q)
        ref = avi.lcp_enumerate(M, q)
        if not sol.solved or len(ref) != 1:
            bad += 1
            continue
        worst_match = max(worst_match, vec_norm(sol.y - ref[0]))
        worst_comp = max(worst_comp, sol.complementarity_residual)
    passed = bad == 0 and worst_match <= 1e-8 and worst_comp <= 1e-9
    criterion(6, "Lemke agrees with enumeration on SPD LCPs", passed,
              f"failures={bad} match={worst_match:.2e} complementarity={worst_comp:.2e}")
    assert passed


def test_criterion_07_free_box_is_newton(criterion):
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    compared = 0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        coeffs = [rng.uniform(-1.0, 1.0, size=4) for _ in range(n)]
        for c in coeffs:
            c[1] = 4.0 + abs(c[1])
        C = rng.uniform(-0.5, 0.5, size=(n, n))
        root = rng.uniform(-1.0, 1.0, size=n)
        base = geqn.ncp_poly(coeffs, C)
        shift = base(root)
        coeffs = [np.concatenate([[c[0] - s], c[1:]]) for c, s in zip(coeffs, shift)]
        smap = geqn.ncp_poly(coeffs, C)
        x0 = root + rng.uniform(-0.3, 0.3, size=n)
        history = driver.josephy_newton(geqn.make_problem(smap, Box.free(n), x0),
                                        SolverOptions(tol_residual=1e-14))
        oracle = classical_newton(smap, smap.jac, x0, len(history.iterates) - 1, np.linalg.solve)
        for x, y in zip(history.iterates, oracle):
            worst = max(worst, vec_norm(x - y))
        compared += len(oracle)
    passed = worst <= 1e-12
    criterion(7, "all-free box reproduces classical Newton", passed,
              f"iterates={compared} worst={worst:.2e}")
    assert passed


def test_criterion_08_majorant_verifier(criterion):
    problem, psi = sqrt2_problem()
    good = geqn.verify_majorant_condition(problem, psi, samples=2048, seed=SEED)
    _, weak = sqrt2_problem(K=0.1)
    bad = geqn.verify_majorant_condition(problem, weak, samples=2048, seed=SEED)
    passed = good.ok and good.passed == 2048 and not bad.ok and bad.passed < bad.samples
    criterion(8, "majorant-condition verifier both ways", passed,
              f"K=2/3: {good.passed}/{good.samples}  K=0.1: {bad.passed}/{bad.samples}")
    assert passed


def test_criterion_09_linearization_error_bound(criterion):
    problem, psi = sqrt2_problem()
    rng = np.random.default_rng(SEED + 9)
    R = psi.domain_r
    x0 = problem.x0
    worst_first = worst_second = -math.inf
    for _ in range(10000):
        t = rng.uniform(0.0, R)
        v = rng.uniform(t, R)
        if not (t < v < R):
            continue
        x = x0 + rng.uniform(-t, t, size=1)
        y = x + rng.uniform(-(v - t), v - t, size=1)
        lhs = problem.lam * vec_norm(geqn.linearization_error(problem.map, x, y))
        mid = psi.linearization_error(t, v) * vec_norm(y - x) ** 2 / (v - t) ** 2
        rhs = 0.5 * psi.d2psi(v) * (v - t) ** 2
        worst_first = max(worst_first, lhs - mid)
        worst_second = max(worst_second, mid - rhs)
    passed = worst_first <= 1e-12 and worst_second <= 1e-12
    criterion(9, "linearization-error bound on sampled tuples", passed,
              f"worst excess: first={worst_first:.2e} second={worst_second:.2e}")
    assert passed


def test_criterion_10_ncp_and_kkt(criterion):
    ncp = geqn.make_problem(geqn.ncp_poly([[-4.0, 0.0, 1.0]]), Box.nonnegative(1), [3.0], lam=1.0 / 6.0)
    h_ncp = driver.josephy_newton(ncp)
    ncp_ok = (h_ncp.outcome is driver.Outcome.CONVERGED and abs(h_ncp.x_final[0] - 2.0) <= 1e-10
              and h_ncp.residuals[-1] <= 1e-10 and len(h_ncp.steps) <= 8)

    rng = np.random.default_rng(SEED + 10)
    L = rng.normal(size=(2, 2))
    Q = L @ L.T + np.eye(2)
    c = rng.normal(size=2)
    a = rng.normal(size=2)
    Qi_c = np.linalg.solve(Q, c)
    Qi_a = np.linalg.solve(Q, a)
    b = float(-a @ Qi_c) - 1.0  # unconstrained optimum violates a.x <= b
    mu = (-a @ Qi_c - b) / (a @ Qi_a)
    x_opt = -Qi_c - mu * Qi_a
    kkt = geqn.make_problem(geqn.qp_kkt(Q, c, [a], [b]), geqn.qp_kkt_box(2, 1), np.zeros(3), lam=1.0)
    h_kkt = driver.josephy_newton(kkt)
    z = h_kkt.x_final
    kkt_ok = (mu > 0 and h_kkt.outcome is driver.Outcome.CONVERGED and len(h_kkt.steps) == 1
              and vec_norm(z[:2] - x_opt) <= 1e-10 and abs(z[2] - mu) <= 1e-10)
    passed = ncp_ok and kkt_ok
    criterion(10, "NCP and QP-KKT solves", passed,
              f"ncp: x={h_ncp.x_final[0]:.17g} iters={len(h_ncp.steps)} res={h_ncp.residuals[-1]:.1e}; "
              f"kkt: iters={len(h_kkt.steps)} mu={mu:.6g} err={vec_norm(z - np.r_[x_opt, mu]):.1e}")
    assert passed
