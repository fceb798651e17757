"""Nonlinearities f for u_t = Lap u + f(u).

Positone nonlinearities built here carry a log-space description on u > 0:
``log_f(u)`` and ``dlog_f(u) = f'(u)/f(u)``.  Everything that has to survive
doubly exponential growth (the tail integral F, the product f'F, the
regular-variation ratios) is computed from those two functions only.

The module also contains the constructor of a growth factor J with
``J >= exp(r)`` for a prescribed convex r, together with the power family
``f(u) = u^m J(u)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError, NumericError
from .young import parse_params

Array = np.ndarray
ScalarFn = Callable[[Array], Array]


def numerical_derivative(func: ScalarFn, u) -> Array:
    """Central difference with step ``h = max(1e-6, 1e-6 |u|)``."""
    u = np.asarray(u, dtype=float)
    h = np.maximum(1e-6, 1e-6 * np.abs(u))
    return (func(u + h) - func(u - h)) / (2 * h)


@dataclass(frozen=True)
class Nonlinearity:
    """A locally Lipschitz f with f(0) = 0.

    For positone families ``log_f`` and ``dlog_f`` describe f on u > 0; the
    real-line ``f`` is then the odd extension ``sign(u) exp(log_f(|u|))``.
    """

    f: ScalarFn
    label: str
    f_prime_exact: Optional[ScalarFn] = None
    log_f: Optional[ScalarFn] = None
    dlog_f: Optional[ScalarFn] = None
    is_positone: bool = False
    is_convex_on_positive: bool = False
    is_odd: bool = False
    is_zero: bool = False
    log_f_increment: Optional[Callable[[float, Array], Array]] = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, u):
        return self.f(np.asarray(u, dtype=float))

    def f_prime(self, u) -> Array:
        u = np.asarray(u, dtype=float)
        if self.f_prime_exact is not None:
            return self.f_prime_exact(u)
        return numerical_derivative(self.f, u)

    def log_increment(self, u: float, t: Array) -> Array:
        """``log f(u + t) - log f(u)``, cancellation free when the family
        supplies a dedicated formula."""
        t = np.asarray(t, dtype=float)
        if self.log_f_increment is not None:
            return self.log_f_increment(u, t)
        return self.log_f(u + t) - self.log_f(np.array(u))

    def log_f_prime(self, u) -> Array:
        """``log f'(u)`` for u > 0 on log-described families."""
        u = np.asarray(u, dtype=float)
        if self.log_f is None or self.dlog_f is None:
            with np.errstate(divide="ignore"):
                return np.log(np.abs(self.f_prime(u)))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.log_f(u) + np.log(self.dlog_f(u))


def _odd_from_log(log_f: ScalarFn) -> ScalarFn:
    def f(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        with np.errstate(all="ignore"):
            mag = np.exp(log_f(np.where(a > 0, a, 1.0)))
        return np.where(a > 0, np.sign(u) * mag, 0.0)
    return f


def _odd_prime_from_log(log_f: ScalarFn, dlog_f: ScalarFn) -> ScalarFn:
    def fp(u):
        a = np.abs(np.asarray(u, dtype=float))
        safe = np.where(a > 0, a, 1.0)
        with np.errstate(all="ignore"):
            val = np.exp(log_f(safe)) * dlog_f(safe)
            at_zero = np.exp(log_f(np.array(1e-300))) * dlog_f(np.array(1e-300))
        return np.where(a > 0, val, np.nan_to_num(at_zero, nan=0.0, posinf=np.inf))
    return fp


def from_log_description(log_f: ScalarFn, dlog_f: ScalarFn, label: str,
                         convex: bool = True, increment=None, **meta) -> Nonlinearity:
    """Odd positone nonlinearity from ``log f`` and ``(log f)'`` on u > 0.

    ``increment(u, t)`` optionally returns ``log f(u+t) - log f(u)`` without
    subtracting two large numbers.
    """
    return Nonlinearity(
        f=_odd_from_log(log_f),
        f_prime_exact=_odd_prime_from_log(log_f, dlog_f),
        log_f=log_f, dlog_f=dlog_f, label=label, log_f_increment=increment,
        is_positone=True, is_convex_on_positive=convex, is_odd=True, meta=dict(meta),
    )


def from_callable(f: ScalarFn, label: str = "custom", f_prime: Optional[ScalarFn] = None,
                  positone: bool = False, convex: bool = False, odd: bool = False) -> Nonlinearity:
    return Nonlinearity(f=f, label=label, f_prime_exact=f_prime, is_positone=positone,
                        is_convex_on_positive=convex, is_odd=odd)


def zero() -> Nonlinearity:
    return Nonlinearity(f=lambda u: np.zeros_like(np.asarray(u, dtype=float)), label="zero",
                        f_prime_exact=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                        is_positone=True, is_convex_on_positive=True, is_odd=True, is_zero=True)


def linear(a: float) -> Nonlinearity:
    """``f(u) = a u`` (used as the linear oracle for the solver)."""
    return Nonlinearity(f=lambda u: a * np.asarray(u, dtype=float), label="linear(a=%g)" % a,
                        f_prime_exact=lambda u: np.full_like(np.asarray(u, dtype=float), a),
                        is_positone=a >= 0, is_convex_on_positive=True, is_odd=True,
                        meta={"slope": a})


def fujita(p: float) -> Nonlinearity:
    """``|u|^{p-1} u``."""
    if p < 1:
        raise DomainError("fujita nonlinearity needs p >= 1")
    return from_log_description(lambda u: p * np.log(u), lambda u: p / np.asarray(u, dtype=float),
                                "fujita(p=%g)" % p, increment=lambda u, t: p * np.log1p(t / u),
                                family="fujita", p=p)


def log_fujita(p: float, m: float) -> Nonlinearity:
    """``|u|^{p-1} u log^m(1 + |u|)``."""
    def log_f(u):
        return p * np.log(u) + m * np.log(np.log1p(u))

    def dlog_f(u):
        u = np.asarray(u, dtype=float)
        return p / u + m / ((1 + u) * np.log1p(u))

    def increment(u, t):
        t = np.asarray(t, dtype=float)
        return p * np.log1p(t / u) + m * np.log1p(np.log1p(t / (1 + u)) / math.log1p(u))

    return from_log_description(log_f, dlog_f, "logfujita(p=%g,m=%g)" % (p, m), increment=increment,
                                family="logfujita", p=p, m=m)


# ---------------------------------------------------------------------------
# growth factors J and the family u^m J(u)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFactor:
    """A positive increasing convex J on [0, inf) in log form.

    ``log_J`` and ``dlog_J = J'/J`` are required.  ``curvature_ratio`` is
    ``(J')^2 / (J'' J)`` when known.
    """

    log_J: ScalarFn
    dlog_J: ScalarFn
    label: str
    curvature_ratio: Optional[ScalarFn] = None
    log_J_increment: Optional[Callable[[float, Array], Array]] = None
    x_max: float = math.inf
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)


def exp_power_J(p: float) -> GrowthFactor:
    """``J = exp(u^p)``."""
    def ratio(u):
        u = np.asarray(u, dtype=float)
        h = p * u ** (p - 1)
        return h ** 2 / (p * (p - 1) * u ** (p - 2) + h ** 2)
    return GrowthFactor(lambda u: np.asarray(u, dtype=float) ** p,
                        lambda u: p * np.asarray(u, dtype=float) ** (p - 1),
                        "exp(u^%g)" % p, curvature_ratio=ratio,
                        log_J_increment=lambda u, t: _power_increment(u, t, p))


def exp_exp_J(p: float) -> GrowthFactor:
    """``J = exp(exp(u^p))``."""
    def dlog(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            return p * u ** (p - 1) * np.exp(u ** p)
    def increment(u, t):
        # e^{(u+t)^p} - e^{u^p} = e^{u^p} expm1((u+t)^p - u^p)
        return math.exp(u ** p) * np.expm1(_power_increment(u, t, p))

    return GrowthFactor(lambda u: np.exp(np.asarray(u, dtype=float) ** p), dlog,
                        "expexp(u^%g)" % p, log_J_increment=increment)


def _power_increment(u: float, t: Array, p: float) -> Array:
    """``(u + t)^p - u^p`` without cancellation."""
    return u ** p * np.expm1(p * np.log1p(np.asarray(t, dtype=float) / u))


def constant_J() -> GrowthFactor:
    return GrowthFactor(lambda u: np.zeros_like(np.asarray(u, dtype=float)),
                        lambda u: np.zeros_like(np.asarray(u, dtype=float)), "1")


def _power_times_J(m: float, J: GrowthFactor) -> Nonlinearity:
    def log_f(u):
        u = np.asarray(u, dtype=float)
        return m * np.log(u) + J.log_J(u)

    def dlog_f(u):
        u = np.asarray(u, dtype=float)
        return m / u + J.dlog_J(u)

    increment = None
    if J.log_J_increment is not None:
        def increment(u, t):
            return m * np.log1p(np.asarray(t, dtype=float) / u) + J.log_J_increment(u, t)

    trivial = J.label == "1"
    return from_log_description(log_f, dlog_f, "u^%g*%s" % (m, J.label), increment=increment,
                                family="powerJ", m=m,
                                J=J, satisfies_G=not trivial and m > 0 or None)


def make_power_J_family(m: float, J: GrowthFactor) -> Nonlinearity:
    """Odd extension of ``f(u) = u^m J(u)`` for ``m >= 1``.

    ``nl.meta["satisfies_G"]`` is False for a constant J, where f is a pure
    power and the growth condition cannot hold.
    """
    if m < 1:
        raise DomainError("u^m J(u) needs m >= 1, got %r" % m)
    nl = _power_times_J(m, J)
    if J.label == "1":
        nl.meta["satisfies_G"] = False
    elif nl.meta.get("satisfies_G") is None:
        nl.meta["satisfies_G"] = True
    return nl


def exp_nonlinearity(p: float, m: float = 0.0) -> Nonlinearity:
    """``sign(u) |u|^m exp(|u|^p)``; with ``m = 0`` this is the odd extension
    of ``exp(u^p)`` (discontinuous at 0, used only for growth diagnostics)."""
    return _power_times_J(m, exp_power_J(p))


def expexp_nonlinearity(p: float, m: float = 0.0) -> Nonlinearity:
    return _power_times_J(m, exp_exp_J(p))


# ---------------------------------------------------------------------------
# Lipschitz modulus
# ---------------------------------------------------------------------------

def lipschitz_modulus(nl: Nonlinearity, s: float) -> float:
    """``sup |f(u) - f(v)| / |u - v|`` over ``|u|, |v| <= s``.

    For odd, positone f that is convex on (0, inf) this equals ``f'(s)``;
    otherwise the maximum of ``|f'|`` on a 4096-point grid of ``[-s, s]``.
    """
    if not s > 0:
        raise DomainError("lipschitz_modulus needs s > 0")
    if nl.is_zero:
        return 0.0
    if nl.is_positone and nl.is_convex_on_positive and nl.is_odd:
        val = float(nl.f_prime(np.array(s)))
    else:
        grid = np.linspace(-s, s, 4096)
        val = float(np.max(np.abs(nl.f_prime(grid))))
    if not math.isfinite(val):
        logv = log_lipschitz_modulus(nl, s)
        if math.isfinite(logv):
            return math.exp(logv) if logv < 709 else math.inf
        raise NumericError("Lipschitz modulus of %s overflows at s=%g" % (nl.label, s))
    return val


def log_lipschitz_modulus(nl: Nonlinearity, s) -> Array:
    """``log l(s)`` for odd convex positone families, vectorised and overflow free."""
    s = np.asarray(s, dtype=float)
    if nl.is_zero:
        return np.full(s.shape, -np.inf)
    if nl.is_positone and nl.is_convex_on_positive and nl.is_odd and nl.log_f is not None:
        return nl.log_f_prime(s)
    vals = np.array([lipschitz_modulus(nl, float(v)) for v in s.reshape(-1)]).reshape(s.shape)
    with np.errstate(divide="ignore"):
        return np.log(vals)


def check_condition_S(nl: Nonlinearity, samples: Optional[Array] = None) -> dict:
    """Sampled check of: C^1, positone, positive and convex on (0, inf),
    and ``l(u) <= C f'(u)``.

    The Lipschitz bound is reported twice: the sup of ``l/f'`` over all
    samples (global) and over samples ``u >= 1`` (local at infinity).  The
    modulus is always taken from the grid maximum here so the comparison
    with f' is not circular.
    """
    u = np.logspace(-4, 2, 61) if samples is None else np.asarray(samples, dtype=float)
    fu = nl(u)
    positone = bool(np.all(u * fu >= 0) and np.all(-u * nl(-u) >= 0))
    positive = bool(np.all(fu > 0))
    a, b = u[:-2], u[2:]
    mid = nl(0.5 * (a + b))
    convex = bool(np.all(mid <= 0.5 * (nl(a) + nl(b)) * (1 + 1e-10) + 1e-300))
    fp = nl.f_prime(u)
    grid_l = np.array([np.max(np.abs(nl.f_prime(np.linspace(-s, s, 4097)))) for s in u])
    with np.errstate(all="ignore"):
        ratio = grid_l / fp
    finite = np.isfinite(ratio)
    glob = float(np.max(ratio[finite])) if np.any(finite) else math.inf
    big = finite & (u >= 1)
    loc = float(np.max(ratio[big])) if np.any(big) else math.inf
    return {"positone": positone, "positive": positive, "convex_on_positive": convex,
            "lipschitz_ratio_global": glob, "lipschitz_ratio_local": loc,
            "holds_global": positone and positive and convex and glob < math.inf,
            "holds_local": positone and positive and convex and loc < math.inf}


# ---------------------------------------------------------------------------
# tail integral F(u) = int_u^inf ds / f(s)
# ---------------------------------------------------------------------------

def scaled_tail_integral(nl: Nonlinearity, u: float, rtol: float = 1e-12,
                         max_doublings: int = 400) -> float:
    """``f(u) F(u) = int_0^inf exp(-(log f(u + t) - log f(u))) dt``.

    The range in t starts with pieces scaled to the local decay length
    ``1 / (log f)'(u)`` and then doubles ``u + t`` until the last increment is
    below ``rtol`` of the accumulated value.  Raises DivergenceError when the
    increments stop shrinking (f at most linear).
    """
    if nl.log_f is None or nl.dlog_f is None:
        raise NumericError("tail integral needs a log-described positone nonlinearity")
    if not u > 0:
        raise DomainError("tail integral needs u > 0")
    h = float(nl.dlog_f(np.array(u)))
    if not (math.isfinite(h) and h > 0):
        raise NumericError("(log f)' not finite or not positive at u=%g" % u)

    def integrand(t):
        d = float(nl.log_increment(u, np.array(t)))
        if math.isnan(d):
            raise NumericError("log f increment is NaN at u=%g, t=%g" % (u, t))
        return math.exp(-max(d, 0.0))

    width = 1.0 / h
    edges = [0.0]
    c = 1.0
    while c * width < u:
        edges.append(c * width)
        c *= 4.0
    total = 0.0
    last_incs: list[float] = []
    a = 0.0
    pieces = iter(edges[1:])
    for k in range(max_doublings + len(edges)):
        b = next(pieces, None)
        if b is None:
            b = a + max(u + a, width)
        if a > 0 and float(nl.log_increment(u, np.array(a))) > 800.0:
            return total          # 1/f has underflowed relative to 1/f(u)
        with warnings.catch_warnings():
            # requests near machine precision trigger roundoff notices only
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            inc, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += inc
        a = b
        if k >= len(edges) - 1:
            last_incs.append(inc)
            if inc <= rtol * total:
                return total
            if len(last_incs) >= 12 and all(x >= y * (1 - 1e-9) for x, y in
                                            zip(last_incs[-8:], last_incs[-9:-1])):
                raise DivergenceError("increments of int 1/f do not decay for %s" % nl.label)
    raise DivergenceError("tail integral of 1/f did not converge for %s" % nl.label)


def tail_integral_F(nl: Nonlinearity, u: float) -> float:
    """``F(u) = int_u^inf ds / f(s)``; 0.0 if it underflows."""
    scaled = scaled_tail_integral(nl, u)
    logF = math.log(scaled) - float(nl.log_f(np.array(u)))
    return math.exp(logF) if logF > -745 else 0.0


def fprime_times_F(nl: Nonlinearity, u: float) -> float:
    """``f'(u) F(u)`` computed as ``(log f)'(u) * f(u) F(u)``."""
    return float(nl.dlog_f(np.array(u))) * scaled_tail_integral(nl, u)


# ---------------------------------------------------------------------------
# growth condition: regular variation of (log f)' and the limit of f'F
# ---------------------------------------------------------------------------

@dataclass
class RegularVariationReport:
    rho_estimate: float                  # nan when inconclusive
    rho_interval: tuple[float, float]
    lambda_ratios: list[tuple[float, float, float]]
    fF_values: list[tuple[float, float]]
    fF_limit: float
    satisfies_G: Optional[bool]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rho_estimate": _json_num(self.rho_estimate),
                "rho_interval": [_json_num(v) for v in self.rho_interval],
                "lambda_ratios": [[l, u, _json_num(r)] for l, u, r in self.lambda_ratios],
                "fF_values": [[u, _json_num(v)] for u, v in self.fF_values],
                "fF_limit": _json_num(self.fF_limit), "satisfies_G": self.satisfies_G,
                "notes": list(self.notes)}


def _json_num(v: float):
    if v is None:
        return None
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


GROWTH_SAMPLES = 10 ** np.arange(1.0, 4.01, 0.5)


def check_growth_condition(nl: Nonlinearity, samples: Array = GROWTH_SAMPLES) -> RegularVariationReport:
    """Estimate the index rho from ``(log f)'(lam u) / (log f)'(u) -> lam^{rho-1}``
    at lam = 2 and 4, and the limit of ``f'(u) F(u)`` over the samples."""
    notes: list[str] = []
    ratios: list[tuple[float, float, float]] = []
    est: dict[float, list[float]] = {2.0: [], 4.0: []}
    for lam in (2.0, 4.0):
        for u in samples:
            try:
                with np.errstate(all="ignore"):
                    r = float(nl.dlog_f(np.array(lam * u)) / nl.dlog_f(np.array(u)))
            except DomainError:
                r = math.nan
            ratios.append((lam, float(u), r))
            est[lam].append(r)

    r2, r4 = np.array(est[2.0]), np.array(est[4.0])
    ok2 = np.isfinite(r2) & (r2 > 0)
    ok4 = np.isfinite(r4) & (r4 > 0)
    rho = math.nan
    interval = (math.nan, math.nan)
    # rapid variation: ratios large and still growing across decades
    grow2 = r2[ok2]
    if grow2.size >= 3 and grow2[-1] > 1e3 and np.all(np.diff(grow2[-3:]) > 0):
        rho = math.inf
        interval = (math.inf, math.inf)
    elif np.any(ok2) and np.any(ok4):
        rho2 = 1 + math.log(r2[ok2][-1]) / math.log(2.0)
        rho4 = 1 + math.log(r4[ok4][-1]) / math.log(4.0)
        interval = (min(rho2, rho4), max(rho2, rho4))
        scale = max(abs(rho2), abs(rho4), 1e-12)
        if abs(rho2 - rho4) <= 0.05 * scale or abs(rho2 - rho4) < 1e-3:
            rho = 0.5 * (rho2 + rho4)
        else:
            notes.append("lambda=2 and lambda=4 estimates disagree by more than 5%")
    else:
        notes.append("ratios not finite at the sampled points")

    ff: list[tuple[float, float]] = []
    for u in samples:
        try:
            v = fprime_times_F(nl, float(u))
        except (NumericError, OverflowError, ValueError, DomainError) as exc:
            notes.append("f'F inconclusive at u=%g: %s" % (u, exc))
            v = math.nan
        ff.append((float(u), v))
    finite_ff = [v for _, v in ff if math.isfinite(v)]
    limit = finite_ff[-1] if finite_ff else math.nan
    if math.isnan(rho) or not math.isfinite(limit):
        verdict: Optional[bool] = None
    else:
        verdict = bool(rho > 1e-2 and abs(limit - 1.0) < 1e-2)
    return RegularVariationReport(rho, interval, ratios, ff, limit, verdict, notes)


# ---------------------------------------------------------------------------
# rapid growth factor from a convex r
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexProfile:
    """r with r(0)=0, r'(0)=1, r''>0 and r'(inf)=inf.  ``dr`` may be None,
    in which case r' is taken from Richardson-extrapolated differences."""

    r: ScalarFn
    label: str
    dr: Optional[ScalarFn] = None


PROFILES = {
    "exp": ConvexProfile(lambda x: np.expm1(x), "e^x-1", dr=lambda x: np.exp(x)),
    "quad": ConvexProfile(lambda x: 0.5 * np.asarray(x) ** 2 + x, "x^2/2+x", dr=lambda x: np.asarray(x) + 1.0),
    "sinh": ConvexProfile(lambda x: np.sinh(x), "sinh(x)", dr=lambda x: np.cosh(x)),
}


def richardson_derivative(func: ScalarFn, x: Array, h: float = 1e-3) -> Array:
    """Central differences at steps h and h/2 combined to fourth order."""
    x = np.asarray(x, dtype=float)
    d1 = (func(x + h) - func(x - h)) / (2 * h)
    d2 = (func(x + h / 2) - func(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def _log_cumtrapz_from_right(x: Array, logy: Array, log_tail: float) -> Array:
    """``log int_{x_i}^{inf} y`` given log-samples and the log of the tail past x[-1]."""
    seg = np.log(np.diff(x) / 2) + np.logaddexp(logy[:-1], logy[1:])
    out = np.empty_like(x)
    out[-1] = log_tail
    acc = log_tail
    for i in range(len(seg) - 1, -1, -1):
        acc = np.logaddexp(acc, seg[i])
        out[i] = acc
    return out


def construct_rapid_J(profile: ConvexProfile | str, x_max: float = 40.0,
                      step: float = 1e-3) -> GrowthFactor:
    """Build J with ``J >= exp(r)`` whose (log J)' is rapidly varying.

    The steps: ``q = -(1/r')'``; ``psi = -log q``; ``phi`` the running max of
    psi on [1, x]; ``p = exp(-phi - x)`` on [1, inf) and
    ``min(q, exp(-1 - phi(1)))`` on (0, 1); ``g = 1 / int_x^inf p``;
    ``log J = int_0^x g``.  Integrals are cumulative trapezoids on a grid that
    is geometric near 0 and uniform (spacing ``step``) beyond; the part of
    ``int p`` past the grid end is closed with the local exponential decay rate.
    Values are returned through linear interpolation of ``log J`` (an upper
    chord, since log J is convex).
    """
    if isinstance(profile, str):
        if profile not in PROFILES:
            raise ValueError("unknown profile %r; known: %s" % (profile, ", ".join(PROFILES)))
        profile = PROFILES[profile]
    r = profile.r
    dr = profile.dr if profile.dr is not None else (lambda x: richardson_derivative(r, x))

    x_end = 2.0 * x_max + 10.0
    x = np.unique(np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 801),
                                  np.arange(1.0, x_end + step / 2, step)]))
    inv_dr = lambda z: 1.0 / dr(np.maximum(z, 0.0))
    h = np.minimum(1e-3, np.maximum(x, 1e-9) / 4)
    q = -(4 * (inv_dr(x + h / 2) - inv_dr(x - h / 2)) / h
          - (inv_dr(x + h) - inv_dr(x - h)) / (2 * h)) / 3
    if np.any(q[1:] <= 0):
        raise NumericError("q = -(1/r')' is not positive; r is not strictly convex")
    q[0] = q[1]
    with np.errstate(divide="ignore"):
        psi = -np.log(q)
    ge1 = x >= 1.0
    i1 = int(np.argmax(ge1))
    phi = np.empty_like(x)
    phi[ge1] = np.maximum.accumulate(psi[ge1])
    phi1 = phi[i1]
    logp = np.where(ge1, -phi - x, np.minimum(np.log(q), -1.0 - phi1))
    if not np.all(logp[ge1] <= np.log(q[ge1]) + 1e-12):
        raise NumericError("p exceeds q on the grid")

    rate = -(logp[-1] - logp[-2]) / (x[-1] - x[-2])
    if not rate > 0:
        raise NumericError("p does not decay at the end of the grid; int p diverges")
    log_tail = logp[-1] - math.log(rate)
    log_T = _log_cumtrapz_from_right(x, logp, log_tail)
    if not np.all(np.isfinite(log_T)):
        raise NumericError("int p is not finite")
    log_g = -log_T
    # g is carried as exp(piecewise-linear log g); cell integrals of g use
    # the same interpolant so log J, (log J)' and increments stay consistent
    keep = x <= x_max
    xs, lg, lp = x[keep], log_g[keep], logp[keep]
    dx = np.diff(xs)
    beta = np.diff(lg) / dx

    def cell_integral(k, a, b):
        """int of g over [xs[k] + a, xs[k] + b] inside cell k."""
        bk = beta[k]
        small = np.abs(bk * (b - a)) < 1e-8
        safe = np.where(small, 1.0, bk)
        exact = np.exp(lg[k] + bk * a) * np.expm1(bk * (b - a)) / safe
        approx = np.exp(lg[k] + bk * a) * (b - a) * (1 + 0.5 * bk * (b - a))
        return np.where(small, approx, exact)

    cells = np.arange(len(dx))
    pieces = cell_integral(cells, np.zeros_like(dx), dx)
    lJ = np.concatenate([[0.0], np.cumsum(pieces)])

    with np.errstate(over="ignore"):
        q_mass, _ = integrate.quad(lambda z: float(-(richardson_derivative(inv_dr, np.array(z)))),
                                   0.0, np.inf, limit=400)
    tail_dr = float(inv_dr(np.array(xs[-1])))
    diagnostics = {
        "x": xs, "log_p": lp, "log_q": np.log(q[keep]), "log_g": lg, "log_J": lJ,
        "r": r(xs), "q_mass": q_mass,
        "q_mass_grid": float(integrate.trapezoid(q[keep], xs) + tail_dr),
        "p_mass": float(np.exp(log_T[0])),
    }

    def locate(u):
        u = np.asarray(u, dtype=float)
        if np.any(u > x_max * (1 + 1e-12)) or np.any(u < 0):
            raise DomainError("J was constructed on [0, %g]" % x_max)
        k = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(dx) - 1)
        return u, k, u - xs[k]

    def log_J(u):
        u, k, off = locate(u)
        return lJ[k] + cell_integral(k, np.zeros_like(off), off)

    def dlog_J(u):
        u, k, off = locate(u)
        return np.exp(lg[k] + beta[k] * off)

    def increment(u, t):
        # int_u^{u+t} g as a sum of positive cell pieces (no cancellation)
        u = float(u)
        t = np.asarray(t, dtype=float)
        _, k, off = locate(np.array(u))
        k, off = int(k), float(off)
        v, j, off_v = locate(u + t)
        first = cell_integral(k, off, np.where(j == k, off + t, dx[k]))
        between = np.where(j > k + 1, lJ[np.maximum(j, k + 1)] - lJ[k + 1], 0.0)
        last = np.where(j > k, cell_integral(j, np.zeros_like(off_v), off_v), 0.0)
        return first + between + last

    def curvature(u):
        # (J')^2 / (J'' J) = g^2 / (g' + g^2) = 1 / (1 + p)
        return 1.0 / (1.0 + np.exp(np.interp(np.asarray(u, dtype=float), xs, lp)))

    return GrowthFactor(log_J, dlog_J, "J[%s]" % profile.label, curvature_ratio=curvature,
                        log_J_increment=increment,
                        x_max=x_max, diagnostics=diagnostics)



def check_rapid_J(J: GrowthFactor, at: float = 20.0, lam: float = 2.0) -> dict:
    """Sample checks on a J from :func:`construct_rapid_J`.

    ``dominance``: ``log J - r`` on the construction grid (must be >= 0).
    ``p_below_q``, ``p_vanishes``, ``p_rapid``: the minorant p is positive and
    below q, decreases to 0 on [1, inf), and ``p(lam x) / p(x)`` falls with x
    (below 1e-8 at ``at``).  ``rapid_ratio``: ``(log J)'(lam x) / (log J)'(x)``
    at ``x = at``.
    """
    d = J.diagnostics
    x, lp, lq = d["x"], d["log_p"], d["log_q"]
    margin = d["log_J"] - d["r"]
    tail = x >= 1.0
    xs = np.array([at / 4, at / 2, at])
    p_ratio = np.exp(np.interp(lam * xs, x, lp) - np.interp(xs, x, lp))
    rapid = float(J.dlog_J(np.array(lam * at)) / J.dlog_J(np.array(at)))
    out = {
        "min_margin": float(np.min(margin)),
        "dominance": bool(np.all(margin >= 0)),
        "p_below_q": bool(np.all(np.isfinite(lp)) and np.all(lp <= lq + 1e-12)),
        "p_vanishes": bool(np.all(np.diff(lp[tail]) < 0) and lp[-1] < -30),
        "p_ratio_samples": [[float(a), float(b)] for a, b in zip(xs, p_ratio)],
        "p_rapid": bool(np.all(np.diff(p_ratio) < 0) and p_ratio[-1] < 1e-8),
        "rapid_ratio": rapid,
        "q_mass": float(d["q_mass"]),
    }
    out["passed"] = bool(out["dominance"] and out["p_below_q"] and out["p_vanishes"]
                         and out["p_rapid"] and rapid > 1e2)
    return out

# ---------------------------------------------------------------------------
# string specs
# ---------------------------------------------------------------------------

def from_spec(spec: str) -> Nonlinearity:
    """``"fujita:p=2"``, ``"logfujita:p=2,m=1"``, ``"explp:m=3,p=2"``,
    ``"expexp:m=3,p=1"``, ``"rapid:r=exp"`` (optionally ``,m=2``),
    ``"linear:a=1"``, ``"zero"``."""
    name, _, rest = spec.strip().partition(":")
    if name == "rapid":
        items = dict(kv.split("=", 1) for kv in rest.split(",") if kv)
        m = float(items.get("m", 1.0))
        x_max = float(items.get("xmax", 40.0))
        return make_power_J_family(m, construct_rapid_J(items.get("r", "exp"), x_max=x_max))
    params = parse_params(rest)
    try:
        if name == "fujita":
            return fujita(params["p"])
        if name == "logfujita":
            return log_fujita(params["p"], params["m"])
        if name == "explp":
            return exp_nonlinearity(params["p"], params.get("m", 0.0))
        if name == "expexp":
            return expexp_nonlinearity(params["p"], params.get("m", 0.0))
        if name == "linear":
            return linear(params["a"])
        if name == "zero":
            return zero()
    except KeyError as exc:
        raise ValueError("nonlinearity %r is missing parameter %s" % (spec, exc)) from None
    raise ValueError("unknown nonlinearity %r" % spec)
