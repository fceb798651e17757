"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` (or ``python
tests/test_acceptance.py``) to see the summary lines.  Tolerances and
runtime limits are pinned at the top of each criterion.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest

from orlicz_heat import grid as G
from orlicz_heat import nonlinearity as NL
from orlicz_heat import semigroup as S
from orlicz_heat import solver as SV
from orlicz_heat import wellposed as W
from orlicz_heat import young as Y
from orlicz_heat.errors import NoBudgetError


def emit(number, ok, seconds, detail):
    line = "criterion %d: %s (%.1f s) %s" % (number, "PASS" if ok else "FAIL", seconds, detail)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    return line


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", W.HypothesisWarning)
        warnings.simplefilter("ignore", S.AccuracyWarning)
        yield


# ---------------------------------------------------------------------------
# 1. Orlicz algebra
# ---------------------------------------------------------------------------

ALGEBRA_FAMILIES = ["power:q=1.5", "power:q=3", "explp:p=1", "explp:p=2", "expexp:p=1",
                    "loglebesgue:q=1,r=2", "max-power:q=1.5,r=3", "sumspace", "linf", "l1capinf"]
COMPLEMENT_FAMILIES = ["power:q=1.5", "power:q=3", "explp:p=2", "loglebesgue:q=1,r=2",
                       "max-power:q=1.5,r=3", "sumspace", "linf"]
INVERSE_RTOL = 1e-10
PRODUCT_RTOL = 1e-2
DILATION_RTOL = 1e-8
LIMIT_1 = 30.0


def algebra_suite():
    rng = np.random.default_rng(11)
    failures = []
    data = G.from_function(lambda x: np.exp(-x ** 2), 1, 8.0, 256)
    dilation_ratios = []
    for spec in ALGEBRA_FAMILIES:
        phi = Y.from_spec(spec)
        inv = lambda v: Y.generalized_inverse(phi, v, method="bisection")
        ys = np.logspace(-6, 6, 61)
        xs = np.logspace(-3, 0.3, 40)
        if not (np.all(Y.values_saturating(phi, inv(ys)) <= ys * (1 + INVERSE_RTOL))
                and np.all(inv(Y.values_saturating(phi, xs)) >= xs * (1 - INVERSE_RTOL))):
            failures.append("%s: inverse sandwich" % spec)
        a = 10 ** rng.uniform(-4, 4, 1000)
        b = 10 ** rng.uniform(-4, 4, 1000)
        mid = inv(0.5 * (a + b))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        if not (np.all(mid >= 0.5 * (inv(a) + inv(b)) - 1e-9 * mid)
                and np.all(lo / inv(lo) <= hi / inv(hi) * (1 + 1e-9))):
            failures.append("%s: concavity of the inverse" % spec)
        for lam in (0.5, 2.0):
            # the identity as stated: ||u||_{Phi_lam} = lam ||u||_Phi
            ratio = G.luxemburg_norm(data, Y.dilate(phi, lam)) / (lam * G.luxemburg_norm(data, phi))
            dilation_ratios.append(ratio)
            if abs(ratio - 1) > DILATION_RTOL:
                failures.append("%s: ||u||_(Phi_%g) / (%g ||u||_Phi) = %.6g" % (spec, lam, lam, ratio))
    for spec in COMPLEMENT_FAMILIES:
        phi = Y.from_spec(spec)
        star = Y.young_complement(phi)
        xs = np.logspace(-3, 3, 13)
        prod = (Y.generalized_inverse(phi, xs, method="bisection")
                * Y.generalized_inverse(star, xs, method="bisection")) / xs
        if not (np.all(prod >= 1 - PRODUCT_RTOL) and np.all(prod <= 2 * (1 + PRODUCT_RTOL))):
            failures.append("%s: x <= Phi^-1 (Phi*)^-1 <= 2x" % spec)
    return failures, dilation_ratios


def test_criterion_1_orlicz_algebra():
    start = time.perf_counter()
    failures, ratios = algebra_suite()
    elapsed = time.perf_counter() - start
    non_dilation = [f for f in failures if "Phi_" not in f]
    detail = ("%d families; inverse/concavity/complement failures: %d; literal dilation identity "
              "failed on %d of %d cases (ratios span %.4g..%.4g, i.e. 1/lam^2)"
              % (len(ALGEBRA_FAMILIES), len(non_dilation), len(failures) - len(non_dilation),
                 len(ratios), min(ratios), max(ratios)))
    ok = not failures and elapsed < LIMIT_1
    emit(1, ok, elapsed, detail)
    assert ok, failures[:5]


# ---------------------------------------------------------------------------
# 2. kernel norms and induction integrals
# ---------------------------------------------------------------------------

KERNEL_THETAS = ["power:q=1", "power:q=2", "explp:p=1", "linf@2"]
KERNEL_DRIFT = 0.05
INDUCTION_SLACK = 1e-6
LIMIT_2 = 120.0


def test_criterion_2_kernel_norms():
    start = time.perf_counter()
    ts = np.logspace(-3, 1, 9)
    worst_drift, bad = 0.0, []
    for spec in KERNEL_THETAS:
        theta = Y.from_spec(spec)
        for n in (1, 2, 3):
            fitted = []
            for panels in (256, 512):
                ratios = [S.kernel_bound_ratio(theta, t, n, panels=panels) for t in ts]
                if not all(np.isfinite(ratios)) or min(ratios) <= 0:
                    bad.append("%s n=%d: ratio not finite" % (spec, n))
                fitted.append(max(ratios))
            drift = abs(fitted[1] / fitted[0] - 1)
            worst_drift = max(worst_drift, drift)
            if drift >= KERNEL_DRIFT:
                bad.append("%s n=%d: drift %.3g" % (spec, n, drift))
    worst_induction = 0.0
    for spec in ["power:q=1", "power:q=2", "explp:p=1", "explp:p=2", "loglebesgue:q=1,r=2"]:
        for a in (1e-3, 0.1, 1.0, 10.0):
            for row in S.verify_induction_bounds(Y.from_spec(spec), a, j_max=6):
                worst_induction = max(worst_induction, row.I_ratio)
                if row.I_ratio > 1 + INDUCTION_SLACK:
                    bad.append("%s a=%g j=%d: I ratio %.8g" % (spec, a, row.j, row.I_ratio))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_2
    emit(2, ok, elapsed, "worst refinement drift %.2e; worst induction ratio %.8f" % (worst_drift, worst_induction))
    assert ok, bad[:5]


# ---------------------------------------------------------------------------
# 3. smoothing
# ---------------------------------------------------------------------------

SLOPE_TARGET, SLOPE_TOL = -0.25, 0.02
SMOOTHING_DRIFT = 0.05
LIMIT_3 = 300.0


def _spike(N, L=16.0):
    u = G.GridFunction(1, L, N, np.zeros(N))
    samples = np.zeros(N)
    samples[N // 2] = 1.0 / u.spacing
    return u.with_samples(samples)


def test_criterion_3_smoothing():
    start = time.perf_counter()
    bad = []
    ts = np.logspace(-2, 0, 9)
    rep = S.smoothing_sweep(Y.power(1), Y.power(2), _spike(1024), ts)
    slope = float(np.polyfit(np.log(ts), np.log(rep.norms), 1)[0])
    if abs(slope - SLOPE_TARGET) > SLOPE_TOL:
        bad.append("L1 -> L2 slope %.4f" % slope)

    ts = np.logspace(-3, 1, 9)
    drifts = {}
    for phi, psi in [("explp:p=1", "explp:p=2"), ("power:q=2", "inf"), ("explp:p=2", "inf"),
                     ("expexp:p=1", "inf")]:
        fitted = []
        for N in (1024, 2048):
            data = G.from_function(lambda x: np.exp(-x ** 2), 1, 16.0, N)
            r = S.smoothing_sweep(Y.from_spec(phi), psi if psi == "inf" else Y.from_spec(psi), data, ts)
            if not all(np.isfinite(r.ratios)) or min(r.ratios) <= 0:
                bad.append("%s -> %s: ratio not finite" % (phi, psi))
            fitted.append(r.fitted_constant)
        drifts["%s->%s" % (phi, psi)] = abs(fitted[1] / fitted[0] - 1)
    bad += ["%s drift %.3g" % (k, v) for k, v in drifts.items() if v >= SMOOTHING_DRIFT]

    # the sup-norm envelope of exp(exp(x^q)) - e is (log log(e + t^{-n/2}))^{1/q}
    for q in (1.0, 2.0):
        env = np.array([S.smoothing_envelope(Y.expexp(q), "inf", t, 1) for t in ts])
        ref = np.log(np.log(np.e + ts ** -0.5)) ** (1 / q)
        if not np.allclose(env, ref, rtol=1e-10):
            bad.append("expexp envelope q=%g" % q)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_3
    emit(3, ok, elapsed, "slope %.4f; worst drift %.2e" % (slope, max(drifts.values())))
    assert ok, bad


# ---------------------------------------------------------------------------
# 4. thresholds
# ---------------------------------------------------------------------------

LIMIT_4 = 60.0


def test_criterion_4_thresholds():
    start = time.perf_counter()
    split = ["diverges", "diverges", "converges", "converges"]
    bad = []
    for p, n in [(2, 1), (2, 2), (3, 1), (3, 2)]:
        kinds = [r["kind"] for r in W.fujita_table(p, n)]
        if kinds != split:
            bad.append("fujita p=%g n=%d: %s" % (p, n, kinds))
    for n in (1, 2):
        kinds = [r["kind"] for r in W.log_threshold_table(W.critical_exponent(n), 0, n, 1.0, n / 2)]
        if kinds != split:
            bad.append("log-fujita n=%d: %s" % (n, kinds))
    p, m, n = 3, 1, 2
    kinds = [r["kind"] for r in W.log_threshold_table(p, m, n, W.fujita_threshold(p, n), n * (m + 1) / 2)]
    if kinds != split:
        bad.append("log-power: %s" % kinds)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_4
    emit(4, ok, elapsed, "7 tables split at the predicted exponent" if not bad else "; ".join(bad))
    assert ok, bad


# ---------------------------------------------------------------------------
# 5. solver
# ---------------------------------------------------------------------------

ORACLE_RTOL = 1e-5
ENVELOPE_TOL = 1e-6
ORDER_TOL = 1e-8
SANDWICH_TOL = 1e-10
PAIRS = 50
LIMIT_5 = 600.0
# h^2 = (2L/N)^2 must not exceed a few first-node times t_1 = 1e-3 T: the sampled
# kernel only behaves like a semigroup on resolved steps, see the ledger.
N5, L5 = 512, 8.0


def _l2_rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_criterion_5_solver():
    start = time.perf_counter()
    cfg = SV.SolveConfig(T=1.0, time_steps=32)
    x = G.from_function(lambda x: x, 1, L5, N5).samples
    bad = []

    phi = G.from_function(lambda x: np.exp(-x ** 2), 1, L5, N5)
    worst_oracle = 0.0
    for a in (0.1, 0.5):
        rep = SV.picard_solve(NL.linear(a), phi, cfg)
        for (t, u), ref in zip(rep.trajectory, SV.heat_reference(phi, rep.times)):
            # two routes: the discrete heat step and the closed-form Gaussian evolution
            exact = np.exp(-x ** 2 / (1 + 4 * t)) / math.sqrt(1 + 4 * t)
            worst_oracle = max(worst_oracle, _l2_rel(u.samples, math.exp(a * t) * ref.samples),
                               _l2_rel(u.samples, math.exp(a * t) * exact))
    if worst_oracle > ORACLE_RTOL:
        bad.append("linear oracle %.3g" % worst_oracle)

    rng = np.random.default_rng(2024)
    nl = NL.fujita(3)
    worst_env = worst_order = 0.0
    sign_ok = True
    for _ in range(PAIRS):
        c, w = rng.uniform(-2, 2), rng.uniform(0.3, 1.5)
        amp = rng.uniform(-0.5, 0.5)
        base = amp * np.exp(-(x - c) ** 2 / w)
        bump = rng.uniform(0.0, 0.3) * np.exp(-(x - rng.uniform(-2, 2)) ** 2 / rng.uniform(0.3, 1.5))
        lo = SV.picard_solve(nl, phi.with_samples(base), cfg)
        hi = SV.picard_solve(nl, phi.with_samples(base + bump), cfg)
        for rep, data in ((lo, base), (hi, base + bump)):
            scale = float(np.max(np.abs(data)))
            if rep.converged:
                worst_env = max(worst_env, rep.envelope_violation / scale)
            if np.all(data >= 0) or np.all(data <= 0):
                sgn = 1.0 if np.all(data >= 0) else -1.0
                sign_ok &= all(float(np.min(sgn * u.samples)) >= -1e-12 * scale for _, u in rep.trajectory)
        if not (lo.converged and hi.converged):
            bad.append("a comparison run did not converge")
            continue
        for (_, u), (_, v) in zip(lo.trajectory, hi.trajectory):
            worst_order = max(worst_order, float(np.max(u.samples - v.samples)))
    if worst_env > ENVELOPE_TOL:
        bad.append("envelope violation %.3g of ||phi||_inf" % worst_env)
    if worst_order > ORDER_TOL:
        bad.append("ordering violation %.3g" % worst_order)
    if not sign_ok:
        bad.append("sign not preserved")

    data = phi * 0.6
    mono = SV.monotone_iterate(nl, data, cfg)
    if mono.ordering_violation > SANDWICH_TOL * 0.6:
        bad.append("sandwich violation %.3g" % mono.ordering_violation)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_5
    emit(5, ok, elapsed, "oracle %.2e; envelope %.2e; ordering %.2e over %d pairs; sandwich %.2e"
         % (worst_oracle, worst_env, worst_order, PAIRS, mono.ordering_violation))
    assert ok, bad


# ---------------------------------------------------------------------------
# 6. global decay for the cubic
# ---------------------------------------------------------------------------

DECAY_SLACK = 1e-3
FINAL_OVER_PEAK = 0.1
LIMIT_6 = 300.0


def test_criterion_6_global_decay():
    start = time.perf_counter()
    nl, phi = NL.fujita(3), Y.max_power(1.5, 3)
    shape = G.from_function(lambda x: np.exp(-x ** 2), 1, 32.0, 512)
    cfg = SV.SolveConfig(T=10.0, time_steps=32)
    ts = np.logspace(math.log10(cfg.first_node * cfg.T), math.log10(cfg.T), 9)
    c = S.smoothing_sweep(phi, "inf", shape, ts).fitted_constant
    try:
        budget = W.global_budget(nl, phi, 1, c)
    except NoBudgetError as exc:
        elapsed = time.perf_counter() - start
        emit(6, False, elapsed, "no radius: %s" % exc)
        pytest.fail("no admissible global budget: %s" % exc)
    rep = SV.global_decay_experiment(nl, phi, 1, budget, shape, cfg, fraction=0.5)
    check = rep.decay_check
    ok = (not check["violations"] and check["final_over_peak"] is not None
          and check["final_over_peak"] < FINAL_OVER_PEAK and rep.converged and not rep.blow_up)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < LIMIT_6
    emit(6, ok, elapsed, "lambda %.4g, A %.4g, final/peak %s" % (budget.lambda_star, budget.A,
                                                                 check["final_over_peak"]))
    assert ok, check


# ---------------------------------------------------------------------------
# 7. rapidly varying J
# ---------------------------------------------------------------------------

RAPID_RATIO = 1e2
LIMIT_7 = 30.0


def test_criterion_7_rapid_growth():
    start = time.perf_counter()
    bad, ratios = [], []
    for name in ("exp", "quad"):
        checks = NL.check_rapid_J(NL.construct_rapid_J(name), at=20.0, lam=2.0)
        ratios.append(checks["rapid_ratio"])
        for key in ("dominance", "p_below_q", "p_vanishes", "p_rapid"):
            if not checks[key]:
                bad.append("%s: %s" % (name, key))
        if not checks["rapid_ratio"] > RAPID_RATIO:
            bad.append("%s: rapid ratio %.3g" % (name, checks["rapid_ratio"]))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_7
    emit(7, ok, elapsed, "rapid ratios at x = 20: %s" % ", ".join("%.3g" % r for r in ratios))
    assert ok, bad


# ---------------------------------------------------------------------------
# 8. regular variation
# ---------------------------------------------------------------------------

RHO_RTOL = 0.02
FF_TOL = 1e-3
FUJITA_RTOL = 1e-10
LIMIT_8 = 30.0


def test_criterion_8_regular_variation():
    start = time.perf_counter()
    bad = []
    for p in (1.0, 2.0, 3.0):
        rep = NL.check_growth_condition(NL.exp_nonlinearity(p))
        if abs(rep.rho_estimate / p - 1) > RHO_RTOL:
            bad.append("rho for p=%g: %.4g" % (p, rep.rho_estimate))
    for p, m in [(1, 0), (1, 3), (2, 0), (2, 3), (3, 1)]:
        v = NL.fprime_times_F(NL.exp_nonlinearity(p, m), 1e4)
        if abs(v - 1) > FF_TOL:
            bad.append("f'F at 1e4 for p=%g m=%g: %.6g" % (p, m, v))
    for p in (1.5, 2.0, 3.0):
        for u in (0.5, 10.0, 1e4):
            v = NL.fprime_times_F(NL.fujita(p), u)
            if abs(v / (p / (p - 1)) - 1) > FUJITA_RTOL:
                bad.append("fujita p=%g u=%g: %.12g" % (p, u, v))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < LIMIT_8
    emit(8, ok, elapsed, "rho, f'F and Fujita identities" if not bad else "; ".join(bad))
    assert ok, bad


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
