import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geqnewton import majorant as mj
from geqnewton.errors import DomainError, NoCertificateError, ParameterError

from oracles import bisect_root, exact_lipschitz_trace

SMALE_BOUND = 3 - 2 * math.sqrt(2)


class TestConstruction:
    def test_lipschitz_closed_form(self):
        psi = mj.make_lipschitz(1, 0.25, 1)
        assert psi.psi(0) == 0.25
        assert psi.dpsi(0) == -1
        assert psi.d2psi(0) == 1
        assert psi.domain_r == 1

    def test_lipschitz_value(self):
        psi = mj.make_lipschitz(2, 0.1, 0.5)
        assert psi.psi(0.1) == pytest.approx(0.01, abs=1e-16)

    @pytest.mark.parametrize("K,b,lam", [(0, 1, 1), (-1, 1, 1), (1, 0, 1), (1, 1, 0), (math.inf, 1, 1)])
    def test_lipschitz_rejects_nonpositive(self, K, b, lam):
        with pytest.raises(ParameterError):
            mj.make_lipschitz(K, b, lam)

    def test_smale_closed_form(self):
        psi = mj.make_smale(1, 0.1, 1)
        assert psi.psi(0) == 0.1
        assert psi.dpsi(0) == -1
        assert psi.d2psi(0) == 2
        assert mj.make_smale(2, 0.05, 1).domain_r == 0.5

    def test_smale_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            mj.make_smale(0, 0.1, 1)

    def test_custom_enforces_h1(self):
        with pytest.raises(ParameterError):
            mj.make_custom(lambda t: 0.1 + t, lambda t: 1.0, lambda t: 0.0, 1.0)
        with pytest.raises(ParameterError):
            mj.make_custom(lambda t: -0.1 - t, lambda t: -1.0, lambda t: 0.0, 1.0)


class TestSmallestRoot:
    def test_lipschitz_regular(self):
        psi = mj.make_lipschitz(1, 0.25)
        expected = bisect_root(psi.psi, 0.0, 1.0)
        assert mj.smallest_root(psi) == pytest.approx(1 - math.sqrt(0.5), rel=1e-14)
        assert mj.smallest_root(psi) == pytest.approx(expected, rel=1e-13)

    def test_lipschitz_double_root(self):
        assert mj.smallest_root(mj.make_lipschitz(1, 0.5)) == 1.0

    def test_smale_boundary(self):
        psi = mj.make_smale(1, SMALE_BOUND)
        t_star = mj.smallest_root(psi)
        assert t_star == pytest.approx(1 - math.sqrt(2) / 2, rel=1e-12)
        # psi is tangent at the double root, so bisection only sees psi <= 0 at t*
        assert abs(psi.psi(t_star)) < 1e-15

    def test_violation_names_inequality(self):
        with pytest.raises(NoCertificateError, match="bK ≤ 1/2") as info:
            mj.smallest_root(mj.make_lipschitz(1, 0.6))
        assert info.value.condition == "bK ≤ 1/2"
        with pytest.raises(NoCertificateError, match="bγ ≤ 3-2√2"):
            mj.smallest_root(mj.make_smale(1, 0.2))

    def test_custom_matches_preset(self):
        K, b = 1.3, 0.2
        ref = mj.make_lipschitz(K, b)
        custom = mj.make_custom(ref.psi, ref.dpsi, ref.d2psi, 1 / K)
        assert mj.smallest_root(custom) == pytest.approx(mj.smallest_root(ref), rel=1e-13)

    def test_custom_without_root(self):
        custom = mj.make_custom(lambda t: t * t - t + 0.5, lambda t: 2 * t - 1, lambda t: 2.0, 2.0)
        with pytest.raises(NoCertificateError):
            mj.smallest_root(custom)

    def test_custom_double_root_uses_bisection_fallback(self):
        # psi(t) = (t - 1/2)^2 ... scaled so psi'(0) = -1: psi = t^2 - t + 1/4
        custom = mj.make_custom(lambda t: t * t - t + 0.25, lambda t: 2 * t - 1, lambda t: 2.0, 2.0)
        assert mj.smallest_root(custom) == pytest.approx(0.5, abs=1e-7)


class TestNewtonMap:
    def test_at_zero_returns_b(self):
        assert mj.newton_map(mj.make_lipschitz(1, 0.25), 0.0) == 0.25

    def test_hand_value(self):
        assert mj.newton_map(mj.make_lipschitz(1, 0.25), 0.25) == pytest.approx(0.25 + 0.03125 / 0.75, rel=1e-15)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            mj.newton_map(mj.make_lipschitz(1, 0.25), 0.3)


class TestScalarSequence:
    def test_matches_exact_rational_iteration(self):
        trace = mj.scalar_sequence(mj.make_lipschitz(1, 0.25), tol=1e-12)
        exact = exact_lipschitz_trace(1, 0.25, len(trace.t) - 1)
        # oracle values: 0, 0.25, 0.2916666..., 0.2928921568627451, ...
        assert trace.t[:4] == pytest.approx([0, 0.25, 0.29166666666666667, 0.29289215686274510], rel=1e-15)
        np.testing.assert_allclose(trace.t, [float(v) for v in exact], rtol=1e-15)
        assert trace.converged
        assert len(trace.t) - 1 <= 8
        assert trace.t_star - trace.t[-1] <= 1e-12

    def test_max_iter_zero(self):
        for psi in (mj.make_lipschitz(1, 0.25), mj.make_smale(1, 0.1)):
            assert mj.scalar_sequence(psi, max_iter=0).t == (0.0,)

    def test_smale_monotone(self):
        trace = mj.scalar_sequence(mj.make_smale(1, 0.1), tol=1e-12)
        assert trace.t[1] == 0.1
        assert all(a < b for a, b in zip(trace.t, trace.t[1:]))
        assert all(t < trace.t_star for t in trace.t)
        assert trace.converged

    def test_double_root_still_converges(self):
        trace = mj.scalar_sequence(mj.make_lipschitz(1, 0.5), max_iter=100, tol=1e-12)
        assert all(a < b for a, b in zip(trace.t, trace.t[1:]))
        assert trace.converged
        # at a double root psi vanishes in floating point about sqrt(eps) early
        assert trace.t_star - trace.t[-1] <= 1e-8


class TestRates:
    def test_lipschitz_quadratic(self):
        rates = mj.rate_constants(mj.make_lipschitz(1, 0.25))
        assert rates.linear == 0.5
        assert rates.quadratic == pytest.approx(1 / (2 * math.sqrt(0.5)), rel=1e-12)

    def test_double_root_has_no_quadratic(self):
        assert mj.rate_constants(mj.make_lipschitz(1, 0.5)).quadratic is None

    def test_smale_general_equals_closed_form(self):
        psi = mj.make_smale(1, 0.1)
        rates = mj.rate_constants(psi)
        closed = mj.smale_quadratic_constant(1.0, mj.smallest_root(psi))
        assert rates.quadratic == pytest.approx(closed, rel=1e-10)


class TestConditions:
    def test_all_hold(self):
        rep = mj.check_conditions(mj.make_lipschitz(1, 0.25))
        assert (rep.h1, rep.h2, rep.h3, rep.h4, rep.kantorovich_ok) == (True,) * 5

    def test_violated(self):
        rep = mj.check_conditions(mj.make_lipschitz(1, 0.6))
        assert not rep.h3 and not rep.kantorovich_ok and not rep.h4
        assert rep.t_star is None

    def test_smale_boundary(self):
        rep = mj.check_conditions(mj.make_smale(1, SMALE_BOUND))
        assert rep.h3 and not rep.h4

    def test_custom_sampled(self):
        ref = mj.make_smale(2.0, 0.05)
        custom = mj.make_custom(ref.psi, ref.dpsi, ref.d2psi, ref.domain_r)
        rep = mj.check_conditions(custom)
        assert rep.h2_provenance == "sampled"
        assert rep.h1 and rep.h2 and rep.h3 and rep.h4
        assert rep.t_star == pytest.approx(mj.smallest_root(ref), rel=1e-12)

    def test_custom_nonconvex_derivative_fails_h2(self):
        # psi'' = 1 - t/2 decreases: psi' is concave
        custom = mj.make_custom(lambda t: 0.1 - t + t * t / 2 - t ** 3 / 12,
                                lambda t: -1 + t - t * t / 4, lambda t: 1 - t / 2, 1.0)
        assert not mj.check_conditions(custom).h2

    def test_custom_double_root_h4_false(self):
        custom = mj.make_custom(lambda t: t * t - t + 0.25, lambda t: 2 * t - 1, lambda t: 2.0, 2.0)
        rep = mj.check_conditions(custom)
        assert rep.h3 and not rep.h4

    def test_h4_implies_h3(self):
        for b in np.linspace(0.01, 0.7, 30):
            rep = mj.check_conditions(mj.make_lipschitz(1, b))
            assert not rep.h4 or rep.h3


lipschitz_params = st.tuples(
    st.floats(1e-3, 1e3), st.floats(1e-4, 0.4999999)).map(lambda p: (p[0], p[1] / p[0]))
smale_params = st.tuples(
    st.floats(1e-3, 1e3), st.floats(1e-4, SMALE_BOUND * 0.999999)).map(lambda p: (p[0], p[1] / p[0]))


@settings(max_examples=200, deadline=None)
@given(lipschitz_params, st.floats(0, 0.999999))
def test_contraction_lipschitz(params, frac):
    K, b = params
    psi = mj.make_lipschitz(K, b)
    t_star = mj.smallest_root(psi)
    t = frac * t_star
    n = mj.newton_map(psi, t, t_star)
    assert t <= n <= t_star
    assert t_star - n <= 0.5 * (t_star - t) + 1e-15 * t_star


@settings(max_examples=200, deadline=None)
@given(smale_params, st.floats(0, 0.999999))
def test_contraction_smale(params, frac):
    gamma, b = params
    psi = mj.make_smale(gamma, b)
    t_star = mj.smallest_root(psi)
    t = frac * t_star
    n = mj.newton_map(psi, t, t_star)
    assert t <= n <= t_star
    assert t_star - n <= 0.5 * (t_star - t) + 1e-14 * t_star


@pytest.mark.parametrize("psi", [mj.make_lipschitz(1, 0.25), mj.make_lipschitz(3, 0.1), mj.make_smale(1, 0.1),
                                 mj.make_smale(5, 0.03)])
def test_newton_step_nonincreasing(psi):
    t_star = mj.smallest_root(psi)
    grid = np.linspace(0, t_star, 1001)[:-1]
    steps = np.array([-psi.psi(t) / psi.dpsi(t) for t in grid])
    assert np.all(np.diff(steps) <= 1e-15)


@settings(max_examples=100, deadline=None)
@given(st.one_of(lipschitz_params.map(lambda p: mj.make_lipschitz(*p)),
                 smale_params.map(lambda p: mj.make_smale(*p))))
def test_quadratic_envelope_on_traces(psi):
    trace = mj.scalar_sequence(psi, tol=0.0)
    C = mj.rate_constants(psi).quadratic
    assert C is not None
    ts = trace.t_star
    # rounding floor of a computed iterate near a nearly double root
    floor = 8 * np.finfo(float).eps * max(1.0, ts) / abs(psi.dpsi(ts))
    for a, b in zip(trace.t, trace.t[1:]):
        assert ts - b <= C * (ts - a) ** 2 + floor


def test_h1_identity():
    for psi in (mj.make_lipschitz(2, 0.2), mj.make_smale(3, 0.05)):
        assert mj.newton_map(psi, 0.0) == psi.psi(0.0) == psi.b


def test_rounding_overshoot_is_clamped():
    # the float Newton step from the last iterate lands one ulp past t_star here
    psi = mj.make_lipschitz(1.4512266002799747, 0.08969582409147928)
    trace = mj.scalar_sequence(psi, max_iter=30, tol=1e-12)
    assert trace.converged
    assert trace.t_star - trace.t[-1] <= 1e-12
    assert all(a < b for a, b in zip(trace.t, trace.t[1:]))
