"""Integral conditions for local and global well-posedness.

Both conditions integrate ``x^{-p*} l(lam Phi^{-1}(x))`` with
``p* = 1 + 2/n``: over ``[1, inf)`` for local existence and over
``(0, inf)`` (with the value compared to ``n/4``) for small global
solutions.  Everything is done in the variable ``s = log x`` and in log
space, so integrands that grow or decay exponentially in s never overflow.

Convergence is decided from the tail increments, in two stages:

1. increments over doublings of x.  Power tails ``x^e`` give a constant
   ratio ``2^{1+e}``; a stable ratio clear of 1 is extrapolated
   geometrically.
2. increments over doublings of ``log y`` with ``y = Phi^{-1}(x)`` (or of
   ``log x`` when Phi jumps to infinity).  Tails ``x^{-1} log^{-b} x`` give
   the ratio ``2^{1-b}``; this stage settles tails that sit on the
   ``x^{-1}`` borderline of stage 1.

A tail that is still borderline after stage 2 is reported as inconclusive.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NoBudgetError
from .nonlinearity import (Nonlinearity, check_condition_S, check_growth_condition,
                           log_lipschitz_modulus)
from .young import YoungFunction, classify_n_function, generalized_inverse, log_evaluate


class HypothesisWarning(UserWarning):
    """A theorem hypothesis (such as Phi being an N-function) is not met."""


LOG2 = math.log(2.0)
X_DOUBLINGS = 53                 # x up to 2^53 ~ 9e15
LOG_DOUBLINGS = 9                # log x up to 2^9 = 512
BAND = 0.05                      # half-width of the borderline exponent band
STABLE_RTOL = 1e-8

_GL = {}


def _gauss_legendre(order: int):
    if order not in _GL:
        _GL[order] = np.polynomial.legendre.leggauss(order)
    return _GL[order]


def critical_exponent(n: int) -> float:
    """``p* = 1 + 2/n``."""
    return 1.0 + 2.0 / n


def fujita_threshold(p: float, n: int) -> float:
    """``q_c = n (p - 1) / 2``."""
    return n * (p - 1.0) / 2.0


def power_law(q: float) -> YoungFunction:
    """``x^q`` for any ``q >= 0``, used to scan exponents across a threshold.

    For ``q < 1`` this is not a Young's function.  Convergence of the integral
    conditions does not change when Phi is multiplied by a constant, so the
    verdicts coincide with those for ``x^q / q``.  At ``q = 0`` the function
    is 1 on ``(0, inf)`` and its generalized inverse is infinite on ``[1, inf)``.
    """
    if q < 0:
        raise DomainError("power_law needs q >= 0")

    def inverse(y):
        y = np.asarray(y, dtype=float)
        if q == 0:
            return np.where(y < 1, 0.0, np.inf)
        return y ** (1.0 / q)

    return YoungFunction(log_eval=lambda x: q * np.log(x), label="x^%g" % q, closed_inverse=inverse)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass
class IntegralVerdict:
    kind: str                                # "converges" | "diverges" | "inconclusive"
    value: Optional[float]
    lam: float
    tail_evidence: list = field(default_factory=list)   # (cutoff X, partial over [1, X])
    stage: int = 1
    exponent: Optional[float] = None         # x-exponent (stage 1) or log exponent b (stage 2)
    uncertainty: float = 0.0
    where: Optional[str] = None              # "zero" / "infinity" for divergent ends
    below_quarter: Optional[bool] = None     # global condition: value < n/4
    notes: list = field(default_factory=list)

    @property
    def converges(self) -> bool:
        return self.kind == "converges"

    @property
    def diverges(self) -> bool:
        return self.kind == "diverges"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = _json_num(self.value)
        d["tail_evidence"] = [[_json_num(x), _json_num(v)] for x, v in self.tail_evidence]
        return d


def _json_num(v):
    if v is None:
        return None
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def _logsumexp(a: np.ndarray, axis=-1) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis)) + np.squeeze(safe, axis=axis)
    m = np.squeeze(m, axis=axis)
    return np.where(np.isneginf(m), -np.inf, np.where(np.isposinf(m), np.inf, out))


def _log_piece_integrals(log_integrand: Callable[[np.ndarray], np.ndarray], edges: np.ndarray,
                         panels: int, order: int = 16, representable: bool = False):
    """``log int_{e_k}^{e_{k+1}} exp(L(u)) du`` for every consecutive pair of edges.

    With ``representable=True`` also return, per piece, whether every
    integrand value was a number below +inf.
    """
    nodes, weights = _gauss_legendre(order)
    a, b = edges[:-1], edges[1:]
    frac = np.arange(panels + 1) / panels
    pa = a[:, None] + (b - a)[:, None] * frac[None, :-1]
    pb = a[:, None] + (b - a)[:, None] * frac[None, 1:]
    half = 0.5 * (pb - pa)
    pts = 0.5 * (pa + pb)[..., None] + half[..., None] * nodes
    vals = np.asarray(log_integrand(pts.reshape(-1)), dtype=float).reshape(pts.shape)
    ok = ~(np.isnan(vals) | np.isposinf(vals)).reshape(len(a), -1).any(axis=-1)
    vals = np.where(np.isnan(vals), np.inf, vals)         # unknown values never count as decay
    with np.errstate(divide="ignore"):
        logw = np.log(half)[..., None] + np.log(weights)
    logs = _logsumexp((vals + logw).reshape(len(a), -1), axis=-1)
    return (logs, ok) if representable else logs


def _partials(log_head: float, log_inc: np.ndarray) -> np.ndarray:
    return np.logaddexp.accumulate(np.concatenate([[log_head], log_inc]))[1:]


def _classify_tail(log_integrand, u_edges1: np.ndarray, x_labels: np.ndarray,
                   stage2: tuple, density: int = 1) -> dict:
    """Classify ``int_0^inf exp(L(u)) du`` from increments between cutoffs.

    ``u_edges1`` are the stage-1 cutoffs (one per doubling of x) starting at
    0, and ``x_labels`` the x values reported for them.  ``stage2`` is
    ``(L2, x_of_u2)``: the same integral written in a logarithmic variable
    ``u2 >= 0``, with cutoffs at ``u2 = 2^j``, and the map back to x for the
    evidence table.
    """
    inc1 = _log_piece_integrals(log_integrand, u_edges1, panels=1 * density, order=24)
    part1 = _partials(-np.inf, inc1)
    evidence = [(float(x), float(np.exp(p)) if p < 709 else math.inf)
                for x, p in zip(x_labels[1:], part1)]
    out = {"evidence": evidence, "stage": 1, "exponent": None, "uncertainty": 0.0, "notes": []}

    if np.all(np.isneginf(inc1)):
        return dict(out, kind="converges", value=0.0)
    if np.any(np.isposinf(inc1)):
        return dict(out, kind="diverges", value=None, notes=["integrand is infinite"])
    if np.isneginf(inc1[-1]):
        return dict(out, kind="converges", value=float(np.exp(part1[-1])),
                    notes=["integrand vanishes beyond the last cutoffs"])

    lr = np.diff(inc1[-8:])
    expo = float(lr[-1] / LOG2 - 1.0)
    out["exponent"] = expo
    if np.all(lr[-4:] >= 0):
        # slowly decaying factors such as log^k x can still make these grow at x ~ 1e16;
        # only a convergent verdict from the deeper stage overrules the trend
        deeper = _stage_two(stage2, density, dict(out, evidence=list(evidence)))
        if deeper["kind"] == "converges":
            return deeper
        return dict(out, kind="diverges", value=None,
                    notes=["increments nondecreasing over the last doublings of x"])
    stable = np.all(np.abs(np.diff(lr[-4:])) <= 1e-3 * np.abs(lr[-1]))
    if stable and expo < -1.0 - BAND:
        r = np.exp(lr[-3:])
        tails = np.exp(part1[-3:]) + np.exp(inc1[-3:]) * r / (1.0 - r)
        spread = float(np.max(tails) - np.min(tails)) / float(np.max(np.abs(tails)))
        if spread < STABLE_RTOL:
            return dict(out, kind="converges", value=float(tails[-1]), uncertainty=spread)

    return _stage_two(stage2, density, out)


def _stage_two(stage2: tuple, density: int, out: dict) -> dict:
    """Increments over doublings of a logarithmic variable."""
    evidence = out["evidence"]
    out = dict(out, notes=list(out["notes"]))
    L2, x_of_u2 = stage2
    u_edges2 = 2.0 ** np.arange(LOG_DOUBLINGS + 1)
    head = _logsumexp(_log_piece_integrals(L2, np.array([0.0, 1.0]), panels=4 * density))
    inc2, ok = _log_piece_integrals(L2, u_edges2, panels=16 * density, representable=True)
    # blocks past the float range of the integrand carry no information
    valid = int(np.argmin(ok)) if not np.all(ok) else len(ok)
    inc2 = inc2[:valid]
    part2 = _partials(float(head), inc2)
    out["stage"] = 2
    for u, p in zip(u_edges2[1:], part2):
        evidence.append((float(x_of_u2(u)), float(np.exp(p)) if p < 709 else math.inf))
    if valid < len(ok):
        out["notes"].append("log-variable blocks beyond %g leave the float range" % u_edges2[valid])
    if valid < 5:
        return dict(out, kind="inconclusive", value=None,
                    notes=out["notes"] + ["too few representable blocks"])
    lr2 = np.diff(inc2)
    betas = 1.0 - lr2[-3:] / LOG2
    out["exponent"] = float(betas[-1])
    if np.all(np.abs(betas - 1.0) < BAND):
        return dict(out, kind="inconclusive", value=None,
                    notes=out["notes"] + ["tail on the x^-1 log^-1 x borderline"])
    if np.all(lr2[-4:] >= 0):
        return dict(out, kind="diverges", value=None,
                    notes=out["notes"] + ["increments nondecreasing over the last doublings of log x"])
    if np.all(betas > 1.0 + BAND) and np.all(lr2[-3:] < 0):
        r = np.exp(lr2[-3:])
        tails = np.exp(part2[-3:]) + np.exp(inc2[-3:]) * r / (1.0 - r)
        spread = float(np.max(tails) - np.min(tails)) / float(np.max(np.abs(tails)))
        return dict(out, kind="converges", value=float(tails[-1]), uncertainty=spread)
    return dict(out, kind="inconclusive", value=None,
                notes=out["notes"] + ["tail increments show no clear trend"])


# ---------------------------------------------------------------------------
# the integrands
# ---------------------------------------------------------------------------

def _require_n_function(phi: YoungFunction) -> None:
    if "n_function" not in phi.evidence:
        classify_n_function(phi)
    if not phi.is_n_function:
        warnings.warn("%s is not classified as an N-function; the well-posedness theorems "
                      "assume one" % phi.label, HypothesisWarning, stacklevel=3)


def _log_integrand_x(nl: Nonlinearity, phi: YoungFunction, lam: float, n: int):
    """``L(s) = log(x * x^{-p*} l(lam Phi^{-1}(x)))`` at ``x = e^s``."""
    p_star = critical_exponent(n)

    def L(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            y = lam * np.asarray(generalized_inverse(phi, np.exp(s)), dtype=float)
        out = np.full(s.shape, np.inf)
        finite = np.isfinite(y)
        if np.any(finite):
            with np.errstate(divide="ignore", invalid="ignore"):
                out[finite] = (1.0 - p_star) * s[finite] + log_lipschitz_modulus(nl, y[finite])
        return out

    return L


def _log_integrand_y(nl: Nonlinearity, phi: YoungFunction, lam: float, n: int):
    """The substituted form ``l(lam y) Phi(y)^{-p*} Phi'(y)`` in ``sigma = log y``.

    ``y Phi'(y) = Phi(y) d log Phi / d sigma``, and the log-derivative comes
    from a central difference of the log evaluator.
    """
    p_star = critical_exponent(n)
    h = 1e-5

    def L(sig):
        sig = np.asarray(sig, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_phi = log_evaluate(phi, np.exp(sig))
            elastic = (log_evaluate(phi, np.exp(sig + h))
                       - log_evaluate(phi, np.exp(sig - h))) / (2 * h)
            return (log_lipschitz_modulus(nl, lam * np.exp(sig)) + (1.0 - p_star) * log_phi
                    + np.log(elastic))

    return L


def _x_edges():
    k = np.arange(X_DOUBLINGS + 1)
    return k * LOG2, 2.0 ** k


def _log_inverse(phi: YoungFunction, log_x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore"):
        return np.log(np.asarray(generalized_inverse(phi, np.exp(log_x)), dtype=float))


def _x_of_log_y(phi: YoungFunction, sig: float) -> float:
    lv = float(log_evaluate(phi, math.exp(sig))) if sig < 709 else math.inf
    return math.exp(lv) if lv < 709 else math.inf


def _stage2(nl, phi, lam, n, toward: int):
    """Stage-2 integrand and evidence map, in ``log y`` when Phi is finite
    (where log-corrected families have the cleanest tails) and in ``log x``
    otherwise.  ``toward = +1`` for the tail at infinity, ``-1`` at zero."""
    if phi.is_finite:
        base = float(_log_inverse(phi, np.array(0.0)))
        Ly = _log_integrand_y(nl, phi, lam, n)
        return (lambda u: Ly(base + toward * np.asarray(u)),
                lambda u: _x_of_log_y(phi, base + toward * u))
    Lx = _log_integrand_x(nl, phi, lam, n)
    return (lambda u: Lx(toward * np.asarray(u)),
            lambda u: math.exp(toward * u) if toward * u < 709 else math.inf)


def _check_args(lam, n):
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if n not in (1, 2, 3):
        raise DomainError("dimension must be 1, 2 or 3")


def check_I_infinity(nl: Nonlinearity, phi: YoungFunction, lam: float, n: int,
                     form: str = "x", density: int = 1) -> IntegralVerdict:
    """Local condition ``int_1^inf x^{-p*} l(lam Phi^{-1}(x)) dx < inf``.

    ``form="y"`` integrates the substituted form ``l(lam y) Phi(y)^{-p*} Phi'(y)``
    over the images of the same cutoffs, so the two forms can be compared
    value by value.
    """
    _check_args(lam, n)
    _require_n_function(phi)
    if nl.is_zero:
        return IntegralVerdict("converges", 0.0, lam, notes=["f is identically zero"])
    edges1, xs = _x_edges()
    stage2 = _stage2(nl, phi, lam, n, +1)
    if form == "x":
        res = _classify_tail(_log_integrand_x(nl, phi, lam, n), edges1, xs, stage2, density)
    elif form == "y":
        if not phi.is_finite:
            raise DomainError("the substituted form needs a finite Young's function")
        sig1 = _log_inverse(phi, edges1)
        L = _log_integrand_y(nl, phi, lam, n)
        base = sig1[0]
        res = _classify_tail(lambda u: L(u + base), sig1 - base, xs, stage2, density)
    else:
        raise ValueError("form must be 'x' or 'y'")
    return IntegralVerdict(res["kind"], res["value"], lam, res["evidence"], res["stage"],
                           res["exponent"], res["uncertainty"],
                           "infinity" if res["kind"] == "diverges" else None, None, res["notes"])


def check_I_zero_infinity(nl: Nonlinearity, phi: YoungFunction, lam: float, n: int,
                          density: int = 1) -> IntegralVerdict:
    """Global condition ``int_0^inf x^{-p*} l(lam Phi^{-1}(x)) dx < n/4``.

    The piece over ``(0, 1]`` is the same integral in ``s = -log x``, the
    form ``x = e^{-s}`` that resolves the endpoint at zero.
    """
    _check_args(lam, n)
    _require_n_function(phi)
    if nl.is_zero:
        return IntegralVerdict("converges", 0.0, lam, below_quarter=True,
                               notes=["f is identically zero"])
    edges1, xs = _x_edges()
    L = _log_integrand_x(nl, phi, lam, n)
    at_inf = _classify_tail(L, edges1, xs, _stage2(nl, phi, lam, n, +1), density)
    at_zero = _classify_tail(lambda u: L(-np.asarray(u)), edges1, 1.0 / xs,
                             _stage2(nl, phi, lam, n, -1), density)
    evidence = sorted(at_zero["evidence"]) + at_inf["evidence"]
    notes = ["zero: " + m for m in at_zero["notes"]] + ["infinity: " + m for m in at_inf["notes"]]
    for end, res in (("zero", at_zero), ("infinity", at_inf)):
        if res["kind"] == "diverges":
            return IntegralVerdict("diverges", None, lam, evidence, res["stage"], res["exponent"],
                                   where=end, below_quarter=False, notes=notes)
    for end, res in (("zero", at_zero), ("infinity", at_inf)):
        if res["kind"] == "inconclusive":
            return IntegralVerdict("inconclusive", None, lam, evidence, res["stage"],
                                   res["exponent"], where=end, notes=notes)
    value = at_zero["value"] + at_inf["value"]
    unc = at_zero["uncertainty"] * at_zero["value"] + at_inf["uncertainty"] * at_inf["value"]
    return IntegralVerdict("converges", value, lam, evidence, max(at_zero["stage"], at_inf["stage"]),
                           None, unc / value if value else 0.0, None, value < n / 4.0, notes)


# ---------------------------------------------------------------------------
# global budget
# ---------------------------------------------------------------------------

def global_constant_A(integral: float, n: int) -> float:
    """``A = (1 - (2/n) * integral)^{-1}``; needs ``integral < n/2``."""
    denom = 1.0 - 2.0 * integral / n
    if not denom > 0:
        raise DomainError("integral must be below n/2")
    return 1.0 / denom


@dataclass
class GlobalBudget:
    lambda_star: float
    A: float
    radius: float
    integral: float
    c_fitted: float
    n: int
    verdict: IntegralVerdict

    def to_dict(self) -> dict:
        return {"lambda_star": self.lambda_star, "A": self.A, "radius": self.radius,
                "integral": self.integral, "c_fitted": self.c_fitted, "n": self.n,
                "verdict": self.verdict.to_dict()}


LAMBDA_GRID = 10.0 ** np.arange(-12, 12.5, 1.0)


def global_budget(nl: Nonlinearity, phi: YoungFunction, n: int, c_fitted: float,
                  bisections: int = 40) -> GlobalBudget:
    """Largest lam (within bisection accuracy) whose global integral is below
    ``(n/4)(1 - 1e-3)``, and the data radius ``lam / (A C)``."""
    if not c_fitted > 0:
        raise DomainError("the fitted smoothing constant must be positive")
    target = n / 4.0 * (1 - 1e-3)

    def ok(lam):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HypothesisWarning)
            v = check_I_zero_infinity(nl, phi, lam, n)
        return v.converges and v.value < target, v

    _require_n_function(phi)
    good, good_v, bad = None, None, None
    for lam in LAMBDA_GRID:
        flag, v = ok(lam)
        if flag:
            good, good_v = lam, v
        elif good is not None:
            bad = lam
            break
    if good is None:
        raise NoBudgetError("no lambda in [1e-12, 1e12] meets the global integral condition "
                            "for %s with %s" % (nl.label, phi.label))
    if bad is not None:
        lo, hi = math.log(good), math.log(bad)
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            flag, v = ok(math.exp(mid))
            if flag:
                lo, good_v = mid, v
            else:
                hi = mid
        good = math.exp(lo)
    A = global_constant_A(good_v.value, n)
    assert 1.0 <= A < 2.0
    return GlobalBudget(good, A, good / (A * c_fitted), good_v.value, c_fitted, n, good_v)


# ---------------------------------------------------------------------------
# asymptotic order relations
# ---------------------------------------------------------------------------

LogFn = Callable[[np.ndarray], np.ndarray]


def as_log_evaluator(obj) -> LogFn:
    """Log-space evaluator for a Young's function, a nonlinearity (on u > 0)
    or a plain positive callable."""
    if isinstance(obj, YoungFunction):
        return lambda x: log_evaluate(obj, x)
    if isinstance(obj, Nonlinearity):
        if obj.log_f is not None:
            return obj.log_f
        return lambda x: np.log(np.abs(obj(x)))
    return lambda x: np.log(np.asarray(obj(np.asarray(x, dtype=float)), dtype=float))


@dataclass
class OrderRelation:
    status: str                  # "holds" | "fails" | "inconclusive"
    direction: str
    K: Optional[float] = None
    x0: float = 1.0
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_dict(self) -> dict:
        return asdict(self)


ORDER_K = 2.0 ** np.arange(41)


def asymptotic_order(g, h, direction: str = "at_infinity", x0: float = 1.0,
                     points: int = 241, log_space: bool = False) -> OrderRelation:
    """Test ``g <~ h``: ``g(x) <= h(K x)`` for some K in ``{2^j : j <= 40}``.

    The range is ``[x0, 1e8]`` at infinity and ``[1e-8, x0]`` at zero.  The
    smallest working K is reported.  The relation fails only when every K is
    violated at the extreme samples with a margin that keeps growing there.
    With ``log_space=True`` plain callables are taken to return ``log g``
    and ``log h``.
    """
    if log_space:
        lg, lh = g, h
    else:
        lg, lh = as_log_evaluator(g), as_log_evaluator(h)
    if direction == "at_infinity":
        xs = np.logspace(math.log10(x0), 8, points)
    elif direction == "at_zero":
        xs = np.logspace(math.log10(x0), -8, points)     # ordered towards the limit point
    else:
        raise ValueError("direction must be 'at_infinity' or 'at_zero'")
    with np.errstate(all="ignore"):
        g_vals = np.asarray(lg(xs), dtype=float)
    usable = np.isfinite(g_vals)
    notes = []
    if not np.all(usable):
        notes.append("%d samples of g are not representable and were skipped" % int(np.sum(~usable)))
    if np.sum(usable) < 10:
        return OrderRelation("inconclusive", direction, None, x0, notes + ["too few usable samples"])
    xs, g_vals = xs[usable], g_vals[usable]
    growing = True
    for K in ORDER_K:
        with np.errstate(all="ignore"):
            h_vals = np.asarray(lh(K * xs), dtype=float)
        margin = g_vals - h_vals
        if np.all(margin <= 1e-12 * np.maximum(1.0, np.abs(g_vals))):
            return OrderRelation("holds", direction, float(K), x0, notes)
        tail = margin[-8:]
        if not (np.all(tail > 0) and np.all(np.diff(tail) > 0)):
            growing = False
    if growing:
        return OrderRelation("fails", direction, None, x0, notes)
    return OrderRelation("inconclusive", direction, None, x0,
                         notes + ["no K up to 2^40 works, yet the violation does not grow"])


# ---------------------------------------------------------------------------
# criticality report
# ---------------------------------------------------------------------------

@dataclass
class CriticalityReport:
    verdict: str                 # "local-wellposed-sufficient" | "nonexistence-regime" | "undetermined"
    critical_pair: bool
    phi_dominates_f: OrderRelation       # f <~ Phi at infinity
    phi_below_f: OrderRelation           # Phi <~ f at infinity
    I_infinity: IntegralVerdict
    zero_power: Optional[dict]           # Phi >~ u^q near 0 for q < n(m-1)/2
    zero_f_power: Optional[dict]         # Phi >~ f^r near 0 for some r >= 1, r > n/2
    rho: Optional[float]
    phi_is_n_function: bool
    condition_S: Optional[dict]
    local_integral_sufficient: bool = False   # Phi an N-function and the local integral converges
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "critical_pair": self.critical_pair,
                "local_integral_sufficient": self.local_integral_sufficient,
                "phi_dominates_f": self.phi_dominates_f.to_dict(),
                "phi_below_f": self.phi_below_f.to_dict(),
                "I_infinity": self.I_infinity.to_dict(), "zero_power": self.zero_power,
                "zero_f_power": self.zero_f_power, "rho": _json_num(self.rho),
                "phi_is_n_function": self.phi_is_n_function,
                "condition_S": self.condition_S, "notes": self.notes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)


def _index_at_zero(nl: Nonlinearity) -> float:
    """Log-log slope of f at 1e-7, the regular-variation index m of f at zero."""
    lf = as_log_evaluator(nl)
    a, b = 1e-7, 1e-6
    return float((lf(np.array(b)) - lf(np.array(a))) / math.log(b / a))


def criticality_report(nl: Nonlinearity, phi: YoungFunction, n: int,
                       lam_grid=(1e-2, 1e-1, 1.0)) -> CriticalityReport:
    """Combine the order relations with the local integral condition.

    ``local-wellposed-sufficient`` needs Phi an N-function and either
    ``Phi >~ f`` at infinity (with (S) and (G)) or a convergent local
    integral.  ``nonexistence-regime`` needs ``Phi <~ f`` without
    ``Phi >~ f``.  Growth index ``rho ~ 0`` is left undetermined.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        is_n = bool(classify_n_function(phi))
        if nl.is_zero:
            v = IntegralVerdict("converges", 0.0, 1.0, notes=["f is identically zero"])
            none = OrderRelation("holds", "at_infinity", 1.0)
            return CriticalityReport("local-wellposed-sufficient", False, none, none, v, None, None,
                                     None, is_n, None, True, ["f = 0"])
        verdicts = [check_I_infinity(nl, phi, lam, n) for lam in lam_grid]
    best = next((v for v in verdicts if v.converges), verdicts[-1])
    up = asymptotic_order(nl, phi, "at_infinity")        # f <~ Phi, i.e. Phi >~ f
    down = asymptotic_order(phi, nl, "at_infinity")      # Phi <~ f
    cond_s = check_condition_S(nl)
    growth = check_growth_condition(nl)
    rho = growth.rho_estimate
    notes = []

    m = _index_at_zero(nl)
    zero_power = None
    if math.isfinite(m) and m > 1:
        q = 0.999 * n * (m - 1) / 2
        rel = asymptotic_order(lambda x: np.asarray(x, dtype=float) ** q, phi, "at_zero")
        zero_power = {"m": m, "q": q, "relation": rel.to_dict(), "holds": rel.holds}
    zero_f_power = None
    for r in sorted({max(1.0, n / 2 + 1e-3), max(1.0, n / 2) + 0.5, max(1.0, n / 2) + 1.0}):
        lf = as_log_evaluator(nl)
        rel = asymptotic_order(lambda x, r=r: np.exp(r * lf(np.asarray(x, dtype=float))), phi, "at_zero")
        if rel.holds:
            zero_f_power = {"r": r, "relation": rel.to_dict(), "holds": True}
            break
    if zero_f_power is None:
        zero_f_power = {"r": None, "holds": False}

    critical = up.holds and down.holds
    theorem_b = bool(is_n and best.converges)
    if rho is not None and math.isfinite(rho) and abs(rho) < 0.05:
        notes.append("growth index rho ~ 0: outside the regime of the criticality theorem")
        verdict = "undetermined"
    elif is_n and (best.converges or (up.holds and cond_s["holds_global"] and growth.satisfies_G)):
        verdict = "local-wellposed-sufficient"
    elif down.holds and not up.holds:
        verdict = "nonexistence-regime"
    else:
        verdict = "undetermined"
    return CriticalityReport(verdict, critical, up, down, best, zero_power, zero_f_power,
                             None if rho is None else float(rho), is_n, cond_s, theorem_b, notes)


# ---------------------------------------------------------------------------
# threshold tables
# ---------------------------------------------------------------------------

THRESHOLD_OFFSETS = (-0.5, -0.1, 0.1, 0.5)


def fujita_table(p: float, n: int, lam: float = 1.0,
                 offsets=THRESHOLD_OFFSETS) -> list[dict]:
    """Local-condition verdicts for ``|u|^{p-1} u`` and ``x^q`` across ``q_c``."""
    from .nonlinearity import fujita

    qc = fujita_threshold(p, n)
    rows = []
    for off in offsets:
        q = qc + off
        if q < 0:
            rows.append({"q": q, "kind": "inconclusive", "notes": ["negative exponent"]})
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HypothesisWarning)
            v = check_I_infinity(fujita(p), power_law(q), lam, n)
        rows.append({"q": q, "kind": v.kind, "exponent": v.exponent, "stage": v.stage})
    return rows


def log_threshold_table(p: float, m: float, n: int, q: float, thresholds: float,
                        lam: float = 1.0, offsets=THRESHOLD_OFFSETS) -> list[dict]:
    """Verdicts for ``|u|^{p-1} u log^m(1+|u|)`` against ``x^q log^r(1+x)``
    for r across ``thresholds``."""
    from .nonlinearity import fujita, log_fujita
    from .young import loglebesgue

    nl = fujita(p) if m == 0 else log_fujita(p, m)
    rows = []
    for off in offsets:
        r = thresholds + off
        phi = loglebesgue(q, r) if r > 0 else power_law(q)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HypothesisWarning)
            v = check_I_infinity(nl, phi, lam, n)
        rows.append({"r": r, "kind": v.kind, "exponent": v.exponent, "stage": v.stage})
    return rows
