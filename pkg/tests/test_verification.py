import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Chebyshev, Polynomial

from kdvb_shock.params import normalized_params, params_for_ratio
from kdvb_shock.profile import LAMBDA_LOW, build_profile, burgers_profile
from kdvb_shock.verification import (QuadratureOrderError, decay_check, envelope_check,
                                     envelope_margins, poincare_check, poincare_equality_cases,
                                     poincare_random_suite, rate_bracket, tail_bounds)

SWEEP = (0.05, 0.1, 0.2, 0.25)


# {{{ envelope

@pytest.mark.parametrize("ratio", SWEEP)
def test_envelope_over_sweep(ratio):
    rep = envelope_check(build_profile(params_for_ratio(ratio)), 1e-8)
    assert rep.passed, rep
    assert rep.n_samples > 1000


def test_envelope_margins_vanish_at_end_states(base_params):
    lower, upper = envelope_margins(np.array([1.0, -1.0]), np.zeros(2), base_params)
    assert np.all(lower == 0.0) and np.all(upper == 0.0)


def test_burgers_profile_sits_at_half():
    p = normalized_params(1.0, 0.0, 1.0)
    prof = burgers_profile(p)
    x = np.linspace(-10, 10, 201)
    u, du = prof(x)
    q = (1 - u) * (1 + u)
    assert np.allclose(-du, 0.5 * q, atol=1e-15)
    rep = envelope_check(prof)
    assert rep.passed
    assert rep.worst_lower_margin >= 0.0


def test_envelope_flags_violation(base_params):
    class Fake:
        params = base_params
        x_samples = np.linspace(-5, 5, 101)

        def __call__(self, x):
            return -np.tanh(x), -2.0 / np.cosh(x) ** 2  # -eps u' = 2 q > q

    rep = envelope_check(Fake())
    assert not rep.passed and rep.worst_upper_margin < -0.5
    assert rep.worst_upper_x == pytest.approx(0.0, abs=0.05)


def test_envelope_scale_consistent():
    # (eps, delta) -> (c eps, c^2 delta) keeps the regime ratio and rescales x by c
    base = build_profile(normalized_params(1.0, 0.2, 1.0))
    c = 2.5
    scaled = build_profile(normalized_params(c, 0.2 * c * c, 1.0))
    x = np.linspace(-10, 10, 401)
    assert np.max(np.abs(scaled(c * x)[0] - base(x)[0])) < 1e-9
    a = np.linspace(-0.99, 0.99, 199)
    m0 = envelope_margins(a, np.interp(a, base(x)[0][::-1], base(x)[1][::-1]), base.params)
    m1 = envelope_margins(a, np.interp(a, scaled(c * x)[0][::-1], scaled(c * x)[1][::-1]),
                          scaled.params)
    assert np.allclose(m0, m1, atol=1e-8)

# }}}


# {{{ tails

def test_rate_bracket_values(base_params):
    lo, hi = rate_bracket(base_params)
    assert lo == pytest.approx(math.sqrt(2) - 1, rel=1e-15) and hi == 2.0


def test_bounds_tight_at_origin(base_params):
    gap_lo, gap_hi, _, _ = tail_bounds(0.0, base_params)
    assert gap_lo == gap_hi == 1.0
    prof = build_profile(base_params)
    gl, gr = prof.end_state_gaps(np.array([0.0]))
    assert gl[0] == pytest.approx(1.0, abs=1e-12) and gr[0] == pytest.approx(1.0, abs=1e-12)


def test_burgers_tails_between_exponentials():
    p = normalized_params(1.0, 0.0, 1.0)
    rep = decay_check(burgers_profile(p))
    assert rep.passed
    x = np.linspace(-40, 0, 4001)
    gap = 2.0 / (np.exp(np.abs(x)) + 1.0)
    assert np.all(np.exp(-2 * np.abs(x)) <= gap * (1 + 1e-15))
    assert np.all(gap <= np.exp(-LAMBDA_LOW * np.abs(x)) * (1 + 1e-15))
    # Burgers tails decay at s/eps; the window top carries a small nonlinear bias
    assert rep.left.fitted_rate == pytest.approx(1.0, rel=1e-3)


@pytest.mark.parametrize("ratio", SWEEP)
@pytest.mark.parametrize("eps", (1.0, 0.5, 0.25))
def test_decay_over_sweep(ratio, eps):
    p = params_for_ratio(ratio, eps)
    rep = decay_check(build_profile(p), 1e-6)
    assert rep.passed, rep.to_dict()
    lo, hi = rate_bracket(p)
    for tail in (rep.left, rep.right):
        assert lo <= tail.fitted_rate <= hi
        assert tail.fit_points > 100


def test_fitted_rates_match_linearization(base_params):
    rep = decay_check(build_profile(base_params))
    assert rep.left.fitted_rate == pytest.approx(1.381966, rel=1e-3)
    assert rep.right.fitted_rate == pytest.approx(0.854102, rel=1e-3)


def test_wide_fit_window_warns(base_params):
    with pytest.warns(RuntimeWarning, match="nonlinear core"):
        rep = decay_check(build_profile(base_params), window=(1e-6, 0.5))
    assert rep.warnings

# }}}


# {{{ Poincare

def test_poincare_constant_equality():
    res = poincare_check(Polynomial([1.0]), (0.0, 1.0))
    assert res.lhs == pytest.approx(1.0, abs=1e-14)
    assert abs(res.margin) <= 1e-12


def test_poincare_linear_equality():
    res = poincare_check(Polynomial([-0.5, 1.0]), (0.0, 1.0))
    assert res.lhs == pytest.approx(1 / 12, abs=1e-15)
    assert res.rhs == pytest.approx(1 / 12, abs=1e-15)
    assert abs(res.margin) <= 1e-12


def test_poincare_sine_exact_values():
    f = (lambda y: np.sin(2 * np.pi * y), lambda y: 2 * np.pi * np.cos(2 * np.pi * y))
    res = poincare_check(f, (0.0, 1.0))
    assert res.lhs == pytest.approx(0.5, abs=1e-13)
    assert res.rhs == pytest.approx(math.pi ** 2 / 6 - 0.125, abs=1e-13)
    assert res.rhs == pytest.approx(1.519934, abs=1e-6)


def test_poincare_input_forms_agree():
    a, b = -1.0, 2.0
    poly = Chebyshev([0.3, -1.0, 0.5, 0.2], domain=[a, b])
    ref = poincare_check(poly, (a, b))
    from_callable = poincare_check(lambda y: poly(y), (a, b))
    n = 40
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * np.arange(n + 1) / n)
    from_values = poincare_check(poly(nodes), (a, b))
    for other in (from_callable, from_values):
        assert other.lhs == pytest.approx(ref.lhs, rel=1e-12)
        assert other.rhs == pytest.approx(ref.rhs, rel=1e-12)


def test_poincare_order_validation():
    with pytest.raises(QuadratureOrderError):
        poincare_check(Polynomial([1.0]), (0, 1), quadrature_order=1)
    with pytest.raises(ValueError):
        poincare_check(Polynomial([1.0]), (1, 0))


def test_equality_cases_report():
    rep = poincare_equality_cases()
    assert rep["passed"] and rep["max_abs_margin"] <= 1e-12
    assert {c["family"] for c in rep["cases"]} == {"constant", "linear"}


def test_random_suite_is_deterministic_and_clean():
    a = poincare_random_suite(seed=42, count=150)
    b = poincare_random_suite(seed=42, count=150)
    assert a == b
    assert a["n_violations"] == 0 and a["passed"]
    assert poincare_random_suite(seed=43, count=150) != a


def test_random_suite_count_validation():
    with pytest.raises(ValueError):
        poincare_random_suite(count=0)


coef = st.lists(st.floats(-5, 5), min_size=1, max_size=7)
endpoints = st.tuples(st.floats(-20, 20), st.floats(0.1, 10))


@given(coef, endpoints, st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_poincare_homogeneity(c_list, ab, c):
    a, b = ab[0], ab[0] + ab[1]
    poly = Chebyshev(c_list, domain=[a, b])
    r1 = poincare_check(poly, (a, b))
    r2 = poincare_check(c * poly, (a, b))
    scale = c * c * max(abs(r1.lhs), abs(r1.rhs), 1e-300)
    assert r2.margin == pytest.approx(c * c * r1.margin, abs=1e-11 * scale)


@given(coef, endpoints, st.floats(-30, 30))
def test_poincare_translation_invariance(c_list, ab, shift):
    a, b = ab[0], ab[0] + ab[1]
    r1 = poincare_check(Chebyshev(c_list, domain=[a, b]), (a, b))
    r2 = poincare_check(Chebyshev(c_list, domain=[a + shift, b + shift]), (a + shift, b + shift))
    scale = max(abs(r1.lhs), abs(r1.rhs), 1e-300)
    assert r2.margin == pytest.approx(r1.margin, abs=1e-11 * scale)


@given(coef, endpoints)
def test_poincare_holds_for_polynomials(c_list, ab):
    a, b = ab[0], ab[0] + ab[1]
    r = poincare_check(Chebyshev(c_list, domain=[a, b]), (a, b))
    assert r.margin >= -1e-10 * max(abs(r.lhs), abs(r.rhs), 1e-300)


@given(st.floats(-5, 5), st.floats(-5, 5), endpoints)
def test_poincare_equality_for_affine(c0, c1, ab):
    # only the centered linear part and constants reach equality together:
    # f = c0 + c1 (y - mid) gives lhs = rhs exactly
    a, b = ab[0], ab[0] + ab[1]
    mid = 0.5 * (a + b)
    f = Polynomial([c0 - c1 * mid, c1])
    r = poincare_check(f, (a, b))
    assert abs(r.margin) <= 1e-12 * max(r.lhs, 1.0)

# }}}
