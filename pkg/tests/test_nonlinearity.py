import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_heat import nonlinearity as N
from orlicz_heat.errors import DivergenceError, DomainError


def test_lipschitz_modulus_examples():
    assert N.lipschitz_modulus(N.fujita(2), 3.0) == pytest.approx(6.0, rel=1e-12)
    u_exp_u = N.make_power_J_family(1, N.exp_power_J(1))
    assert N.lipschitz_modulus(u_exp_u, 1.0) == pytest.approx(2 * math.e, rel=1e-12)
    sine = N.from_callable(np.sin, "sin")          # numerical derivative, grid path
    assert N.lipschitz_modulus(sine, math.pi) == pytest.approx(1.0, abs=1e-9)
    assert N.lipschitz_modulus(N.zero(), 5.0) == 0.0
    with pytest.raises(DomainError):
        N.lipschitz_modulus(N.fujita(2), 0.0)


def test_odd_extension_exact():
    for nl in (N.fujita(3), N.log_fujita(2, 1), N.exp_nonlinearity(2, 3)):
        u = np.linspace(0.01, 3, 50)
        np.testing.assert_array_equal(nl(-u), -nl(u))
        assert nl(0.0) == 0.0


def test_numerical_derivative_matches_exact():
    nl = N.log_fujita(3, 1)
    u = np.linspace(0.2, 5, 30)
    np.testing.assert_allclose(N.numerical_derivative(nl.f, u), nl.f_prime(u), rtol=1e-7)


def test_tail_integral_examples():
    assert N.tail_integral_F(N.exp_nonlinearity(1), 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    assert N.tail_integral_F(N.fujita(2), 2.0) == pytest.approx(0.5, rel=1e-10)
    # mpmath tanh-sinh and Gauss-Legendre at 30 digits agree on this value
    value = N.tail_integral_F(N.make_power_J_family(3, N.exp_power_J(2)), 1.0)
    assert value == pytest.approx(0.0742477533879610239591799973507, rel=1e-9)


def test_tail_integral_diverges_for_linear_growth():
    with pytest.raises(DivergenceError):
        N.tail_integral_F(N.fujita(1), 1.0)
    with pytest.raises(DivergenceError):
        N.tail_integral_F(N.log_fujita(1, 0.5), 1.0)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_rho_for_exp_power(p):
    report = N.check_growth_condition(N.exp_nonlinearity(p))
    assert report.rho_estimate == pytest.approx(p, rel=0.02)
    assert report.fF_limit == pytest.approx(1.0, abs=1e-3)
    assert report.satisfies_G is True


def test_exp_fF_identically_one():
    report = N.check_growth_condition(N.exp_nonlinearity(1))
    for _, v in report.fF_values:
        assert v == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_fujita_fails_growth_condition(p):
    report = N.check_growth_condition(N.fujita(p))
    for _, v in report.fF_values:
        assert v == pytest.approx(p / (p - 1), rel=1e-10)
    assert report.rho_estimate == pytest.approx(0.0, abs=1e-9)
    assert report.satisfies_G is False


def test_doubly_exponential_is_rapidly_varying():
    report = N.check_growth_condition(N.expexp_nonlinearity(1, 3))
    assert report.rho_estimate == math.inf
    finite = [v for _, v in report.fF_values if math.isfinite(v)]
    assert len(finite) >= 3 and finite[-1] == pytest.approx(1.0, abs=1e-6)
    assert any("inconclusive" in n for n in report.notes)


def test_power_J_family():
    nl = N.make_power_J_family(2, N.exp_power_J(1))
    assert nl(1.0) == pytest.approx(math.e, rel=1e-14)
    with pytest.raises(DomainError):
        N.make_power_J_family(0.5, N.exp_power_J(1))
    report = N.check_growth_condition(N.make_power_J_family(3, N.exp_power_J(2)),
                                      samples=np.array([10.0, 31.6, 100.0]))
    assert report.fF_values[-1][1] == pytest.approx(1.0, abs=1e-3)
    assert N.make_power_J_family(2, N.constant_J()).meta["satisfies_G"] is False
    assert nl.meta["satisfies_G"] is True


@pytest.fixture(scope="module", params=["exp", "quad"])
def rapid(request):
    return request.param, N.construct_rapid_J(request.param)


def test_rapid_J_dominates_exp_r(rapid):
    name, J = rapid
    d = J.diagnostics
    assert np.all(d["log_J"] >= d["r"])
    for x in (1.0, 2.0, 5.0):
        assert float(J.log_J(np.array(x))) >= float(N.PROFILES[name].r(np.array(x)))
    assert float(J.log_J(np.array(0.0))) == 0.0


def test_rapid_J_minorant_properties(rapid):
    _, J = rapid
    d = J.diagnostics
    x, lp, lq = d["x"], d["log_p"], d["log_q"]
    assert np.all(lp <= lq + 1e-12)
    assert np.all(np.diff(lp[x >= 1]) < 0) and lp[-1] < -30
    xs = np.array([5.0, 10.0, 20.0])
    ratio = np.exp(np.interp(2 * xs, x, lp) - np.interp(xs, x, lp))
    assert np.all(np.diff(ratio) < 0) and ratio[-1] < 1e-8
    assert d["q_mass"] == pytest.approx(1.0, abs=1e-8)


def test_rapid_J_is_rapidly_varying(rapid):
    _, J = rapid
    ratio = float(J.dlog_J(np.array(40.0)) / J.dlog_J(np.array(20.0)))
    assert ratio > 1e2
    gs = J.dlog_J(np.linspace(0, 40, 400))
    assert np.all(np.diff(gs) > 0)
    # curvature identity (J')^2 / (J'' J) = 1 / (1 + p) -> 1
    assert float(J.curvature_ratio(np.array(20.0))) == pytest.approx(1.0, abs=1e-10)


def test_rapid_family_growth_limit(rapid):
    _, J = rapid
    nl = N.make_power_J_family(1, J)
    report = N.check_growth_condition(nl, samples=np.array([4.0, 8.0, 16.0]))
    assert report.rho_estimate == math.inf
    assert report.fF_values[-1][1] == pytest.approx(1.0, abs=1e-6)


def test_rapid_rejects_concave_profile():
    bad = N.ConvexProfile(lambda x: np.log1p(x), "log(1+x)", dr=lambda x: 1 / (1 + np.asarray(x)))
    with pytest.raises(Exception):
        N.construct_rapid_J(bad)


def test_condition_S_records_global_and_local():
    rep = N.check_condition_S(N.fujita(3))
    assert rep["holds_global"] and rep["holds_local"]
    assert rep["lipschitz_ratio_global"] == pytest.approx(1.0, rel=1e-6)
    sine = N.check_condition_S(N.from_callable(np.sin, "sin", f_prime=np.cos))
    assert not sine["positive"] or not sine["convex_on_positive"]


def test_from_spec():
    assert N.from_spec("fujita:p=2")(2.0) == pytest.approx(4.0)
    assert N.from_spec("logfujita:p=2,m=1")(1.0) == pytest.approx(math.log(2))
    assert N.from_spec("explp:m=3,p=2")(1.0) == pytest.approx(math.e)
    assert N.from_spec("expexp:m=3,p=1")(1.0) == pytest.approx(math.exp(math.e))
    assert N.from_spec("rapid:r=exp,xmax=10").meta["satisfies_G"] is True
    with pytest.raises(ValueError):
        N.from_spec("bogus:p=1")


GROWING = [N.exp_nonlinearity(2), N.make_power_J_family(3, N.exp_power_J(2)),
           N.make_power_J_family(3, N.exp_power_J(1)), N.expexp_nonlinearity(1, 3)]


@pytest.mark.parametrize("nl", GROWING, ids=lambda nl: nl.label)
def test_square_is_dominated_by_dilation(nl):
    x = np.logspace(0.5, 2, 60)
    witness = None
    for K in (1.0, 2.0, 4.0, 8.0):
        with np.errstate(over="ignore"):
            if np.all(2 * nl.log_f(x) <= nl.log_f(K * x)):
                witness = K
                break
    assert witness is not None and witness <= 8


@pytest.mark.parametrize("nl", GROWING, ids=lambda nl: nl.label)
def test_superpolynomial_growth(nl):
    u = np.logspace(0.5, 2, 16)
    rho = N.check_growth_condition(nl).rho_estimate
    vals = np.log(nl.log_f(u)) - 5 * np.log(u) if math.isinf(rho) else nl.log_f(u) - 5 * np.log(u)
    tail = vals[-8:]
    assert np.all(np.diff(tail) > 0) and tail[-1] > tail[0] + 1


@settings(max_examples=100, deadline=None)
@given(s=st.floats(1e-3, 20.0), which=st.integers(0, 2))
def test_modulus_equals_derivative_for_convex_odd(s, which):
    nl = [N.fujita(3), N.make_power_J_family(2, N.exp_power_J(1)), N.log_fujita(2, 1)][which]
    grid = np.linspace(-s, s, 20001)
    assert N.lipschitz_modulus(nl, s) == pytest.approx(np.max(np.abs(nl.f_prime(grid))), rel=1e-9)
