"""Young's functions: evaluation in log space, generalized inverse, complement,
dilation and the N-function / Delta_2 classifiers.

A Young's function is stored as a vectorized *log evaluator*
``x -> log Phi(x)`` returning ``-inf`` where ``Phi(x) = 0`` and ``+inf`` where
``Phi(x) = inf``.  Working with logarithms keeps doubly exponential families
such as ``exp(exp(x^p)) - e`` usable far past the float64 overflow point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericError

LogEvaluator = Callable[[np.ndarray], np.ndarray]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class YoungFunction:
    """An extended-valued convex function on ``[0, inf]`` with ``Phi(0) = 0``.

    ``log_eval`` must accept and return float arrays.  ``closed_inverse`` and
    ``closed_complement`` are optional closed forms; they are used as oracles
    against the generic numerical routines and as fast paths downstream.
    ``derivative`` (when known) returns ``Phi'(x)`` on arrays.
    """

    log_eval: LogEvaluator
    x_infinity: float = math.inf
    label: str = "custom"
    closed_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    closed_complement: Optional[Callable[[], "YoungFunction"]] = None
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    evidence: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def is_finite(self) -> bool:
        return math.isinf(self.x_infinity)

    @property
    def is_n_function(self) -> Optional[bool]:
        return self.evidence.get("n_function")

    def __call__(self, x):
        return evaluate(self, x)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _check_nonneg(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("Young's functions are defined on [0, inf]; got %r" % (x,))
    return arr


def log_evaluate(phi: YoungFunction, x):
    """Return ``log Phi(x)``; ``-inf`` where Phi vanishes, ``+inf`` past x_inf."""
    arr = _check_nonneg(x)
    with np.errstate(all="ignore"):
        out = np.asarray(phi.log_eval(arr), dtype=float)
    out = np.where(arr > phi.x_infinity, np.inf, out)
    out = np.where(arr == 0, -np.inf, out)
    if np.any(np.isnan(out)):
        raise NumericError("log evaluator of %s produced NaN" % phi.label)
    return float(out) if out.ndim == 0 else out


def evaluate(phi: YoungFunction, x):
    """Return ``Phi(x)`` as a float (or array).

    Values whose logarithm exceeds the float64 range raise ``OverflowError``
    rather than silently turning into ``inf``, because ``inf`` is reserved
    for points beyond ``x_infinity``; use :func:`log_evaluate` there.
    """
    logv = np.asarray(log_evaluate(phi, x))
    arr = np.asarray(x, dtype=float)
    finite_big = np.isfinite(logv) & (logv > _LOG_FLOAT_MAX)
    if np.any(finite_big):
        raise OverflowError(
            "%s(x) exceeds float64 range; use log_evaluate" % phi.label)
    with np.errstate(over="ignore"):
        out = np.exp(logv)
    out = np.where(arr > phi.x_infinity, np.inf, out)
    return float(out) if out.ndim == 0 else out


def values_saturating(phi: YoungFunction, x: np.ndarray) -> np.ndarray:
    """Array evaluation where float overflow is reported as ``inf``.

    Convenient for modular integrals, where an overflowing integrand already
    decides the comparison with 1.
    """
    arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        logv = np.asarray(phi.log_eval(arr), dtype=float)
        out = np.exp(logv)
    out = np.where(arr > phi.x_infinity, np.inf, out)
    out = np.where(arr == 0, 0.0, out)
    return out


def young_type(phi: YoungFunction) -> str:
    """Classify as type "I" (finite), "II" (finite up to and at x_inf)
    or "III" (blows up at x_inf)."""
    if phi.is_finite:
        return "I"
    at_end = log_evaluate(phi, phi.x_infinity)
    return "III" if math.isinf(at_end) and at_end > 0 else "II"


# ---------------------------------------------------------------------------
# generalized inverse
# ---------------------------------------------------------------------------

_POW2_EXPONENTS = np.arange(-1074, 1024)
_POW2 = np.ldexp(1.0, _POW2_EXPONENTS)


def _log_values(phi: YoungFunction, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        out = np.asarray(phi.log_eval(x), dtype=float)
    out = np.where(x > phi.x_infinity, np.inf, out)
    return np.where(x == 0, -np.inf, out)


def _inverse_bisection(phi: YoungFunction, y: np.ndarray, rtol: float = 1e-12,
                       max_iter: int = 200) -> np.ndarray:
    """Vectorised ``inf{x : Phi(x) > y}``.

    The bracket comes from scanning the powers of two (the array form of
    doubling from 1); bisection then runs until ``hi - lo <= rtol * hi``.
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        log_y = np.log(y)
    # bracket on a window of powers of two, widened until it covers every y
    lo_k, hi_k = 1074 - 64, 1074 + 64
    while True:
        ladder = _log_values(phi, _POW2[lo_k:hi_k])
        ladder = np.maximum.accumulate(np.where(np.isnan(ladder), -np.inf, ladder))
        count = np.searchsorted(ladder, log_y, side="right")
        need_low = lo_k > 0 and np.any(count == 0)
        need_high = hi_k < len(_POW2) and np.any(count == hi_k - lo_k)
        if not (need_low or need_high):
            break
        if need_low:
            lo_k = max(0, lo_k - 4 * (hi_k - lo_k))
        if need_high:
            hi_k = min(len(_POW2), hi_k + 4 * (hi_k - lo_k))
    count = count + lo_k
    out = np.empty_like(y)
    none = count == 0
    every = count == len(_POW2)
    out[none] = 0.0
    out[every] = np.inf
    mid_idx = ~(none | every)
    if np.any(mid_idx):
        k = count[mid_idx] - 1
        lo = _POW2[k].copy()
        hi = 2.0 * lo
        ly = log_y[mid_idx]
        for _ in range(max_iter):
            active = hi - lo > rtol * hi
            if not np.any(active):
                break
            mid = 0.5 * (lo + hi)
            up = _log_values(phi, mid) > ly
            hi = np.where(active & up, mid, hi)
            lo = np.where(active & ~up, mid, lo)
        out[mid_idx] = lo
    return np.minimum(out, phi.x_infinity)


def generalized_inverse(phi: YoungFunction, y, method: str = "auto"):
    """``Phi^{-1}(y) = inf{x > 0 : Phi(x) > y}``.

    ``method="bisection"`` always uses the generic bracketing search;
    ``"auto"`` prefers a closed form when the family ships one.  Accepts a
    scalar or an array.  ``y = inf`` maps to ``inf``.
    """
    arr = _check_nonneg(y)
    use_closed = method == "auto" and phi.closed_inverse is not None
    if method not in ("auto", "bisection"):
        raise ValueError("unknown method %r" % method)
    if use_closed:
        with np.errstate(all="ignore"):
            out = np.asarray(phi.closed_inverse(arr), dtype=float)
        out = np.minimum(out, phi.x_infinity)
        out = np.where(np.isinf(arr), np.inf, out)
    else:
        out = _inverse_bisection(phi, arr.reshape(-1)).reshape(arr.shape)
        out = np.where(np.isinf(arr), np.inf, out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# complement
# ---------------------------------------------------------------------------

def _golden_max(func: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                iters: int = 60) -> np.ndarray:
    """Elementwise golden-section maximisation of ``func`` on ``[a, b]``."""
    a, b = a.copy(), b.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(iters):
        left = fc >= fd
        # left: keep [a, d]; right: keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLDEN * (b - a)
        new_d = a + _GOLDEN * (b - a)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc_keep, fd_keep = fc, fd
        probe = func(np.where(left, c, d))
        fc = np.where(left, probe, fd_keep)
        fd = np.where(left, fc_keep, probe)
    return np.maximum.reduce([fc, fd, func(a), func(b)])


class _ComplementEvaluator:
    """Evaluates ``sup_{0 <= y <= x_inf} (x y - Phi(y))`` for arrays of x."""

    def __init__(self, phi: YoungFunction, grid: np.ndarray, slope: float):
        self.phi = phi
        self.grid = grid
        self.slope = slope
        self._grid_vals: Optional[np.ndarray] = None

    @property
    def grid_vals(self) -> np.ndarray:
        if self._grid_vals is None:
            self._grid_vals = values_saturating(self.phi, self.grid)
        return self._grid_vals

    def _objective(self, x: np.ndarray):
        phi = self.phi
        return lambda y: x * y - values_saturating(phi, y)

    def _extended(self, x: float) -> float:
        """Fallback when the peak sits at the top of the base grid."""
        phi = self.phi
        ys, vals = self.grid, x * self.grid - self.grid_vals
        while np.argmax(vals) == len(ys) - 1 and ys[-1] < phi.x_infinity:
            top = ys[-1]
            if top > 1e300:
                return math.inf
            ext = top * np.logspace(0, 4, 1025)[1:]
            if math.isfinite(phi.x_infinity):
                ext = np.append(ext[ext < phi.x_infinity], phi.x_infinity)
            ys = np.concatenate([ys, ext])
            vals = np.concatenate([vals, x * ext - values_saturating(phi, ext)])
        return self._refine(np.array([x]), ys, vals[None, :])[0]

    def _refine(self, x: np.ndarray, ys: np.ndarray, vals: np.ndarray) -> np.ndarray:
        idx = np.argmax(vals, axis=1)
        rows = np.arange(len(x))
        peak = vals[rows, idx]
        out = np.empty(len(x))
        overflow = peak == np.inf
        out[overflow] = np.inf
        if np.any(~np.isfinite(peak) & ~overflow):
            raise NumericError("complement of %s: objective not finite at its peak"
                               % self.phi.label)
        # a concave objective rises up to its peak and falls after it
        with np.errstate(invalid="ignore"):
            diffs = np.diff(vals, axis=1)
        tol = 1e-9 * (np.abs(peak) + x * ys[idx] + 1.0)
        cols = np.arange(diffs.shape[1])[None, :]
        before = cols < idx[:, None]
        bad = np.where(before, diffs < -tol[:, None], diffs > tol[:, None])
        bad &= np.isfinite(diffs)
        if np.any(bad[~overflow]):
            raise NumericError("complement of %s: objective is not unimodal; evaluator not convex"
                               % self.phi.label)
        ok = ~overflow
        lo = np.where(idx > 0, ys[np.maximum(idx - 1, 0)], 0.0)
        hi = ys[np.minimum(idx + 1, len(ys) - 1)]
        best = _golden_max(self._objective(x[ok]), lo[ok], hi[ok])
        out[ok] = np.maximum.reduce([np.zeros(ok.sum()), best, peak[ok]])
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        flat = np.asarray(x, dtype=float).reshape(-1)
        out = np.full(flat.shape, -np.inf)
        beyond = flat > self.slope
        out[beyond] = np.inf
        work = np.flatnonzero(~beyond & (flat > 0))
        top_open = self.grid[-1] < self.phi.x_infinity
        for start in range(0, len(work), 128):
            sel = work[start:start + 128]
            xs = flat[sel]
            vals = xs[:, None] * self.grid[None, :] - self.grid_vals[None, :]
            at_top = (np.argmax(vals, axis=1) == len(self.grid) - 1) & top_open
            vals_in = np.empty(len(sel))
            if np.any(~at_top):
                vals_in[~at_top] = self._refine(xs[~at_top], self.grid, vals[~at_top])
            for k in np.flatnonzero(at_top):
                vals_in[k] = self._extended(float(xs[k]))
            with np.errstate(divide="ignore"):
                out[sel] = np.log(vals_in)
        return out.reshape(np.shape(x))


def young_complement(phi: YoungFunction) -> YoungFunction:
    """Young's complement ``Phi*(x) = sup_y (xy - Phi(y))`` using numerical
    maximization: a log grid of 256 points per decade on ``[1e-8, 1e8]``
    (cut at x_inf) followed by golden-section refinement of the peak.

    Type III functions are rejected.  The resulting function evaluates the
    supremum on demand; its ``x_infinity`` is the asymptotic slope of Phi.
    """
    if young_type(phi) == "III":
        raise DomainError("complement is not supported for type III Young's functions")
    grid = np.logspace(-8, 8, 16 * 256 + 1)
    if math.isfinite(phi.x_infinity):
        grid = grid[grid < phi.x_infinity]
        grid = np.append(grid, phi.x_infinity)

    # asymptotic slope lim Phi(y)/y bounds where Phi* is finite
    if math.isfinite(phi.x_infinity):
        slope = math.inf
    else:
        big = np.array([1e150, 1e300])
        logv = np.asarray(log_evaluate(phi, big))
        s = np.exp(np.minimum(logv - np.log(big), 700.0))
        slope = math.inf if s[-1] > 1e100 else float(s[-1])

    return YoungFunction(log_eval=_ComplementEvaluator(phi, grid, slope), x_infinity=slope,
                         label="complement(%s)" % phi.label)


def conjugate(phi: YoungFunction) -> YoungFunction:
    """Closed-form complement when the family has one, numerical otherwise."""
    if phi.closed_complement is not None:
        return phi.closed_complement()
    return young_complement(phi)


# ---------------------------------------------------------------------------
# dilation
# ---------------------------------------------------------------------------

def dilate(phi: YoungFunction, lam: float) -> YoungFunction:
    """``Phi_lam(x) = Phi(x / lam)``; Luxemburg norms scale by ``lam``."""
    if not (lam > 0) or math.isinf(lam):
        raise DomainError("dilation factor must be a positive real, got %r" % lam)
    inv = phi.closed_inverse
    deriv = phi.derivative
    return YoungFunction(
        log_eval=lambda x: phi.log_eval(np.asarray(x) / lam),
        x_infinity=phi.x_infinity * lam,
        label="%s/dil%g" % (phi.label, lam),
        closed_inverse=(lambda y: lam * inv(y)) if inv is not None else None,
        derivative=(lambda x: deriv(np.asarray(x) / lam) / lam) if deriv is not None else None,
    )


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _vanishes(log_ratios: np.ndarray, xs: np.ndarray) -> tuple[bool, float]:
    """Decide whether sampled ratios (given as logarithms) tend to zero.

    The ratios must be strictly decreasing.  They pass outright when the
    extreme sample is below ``1e-3``.  Slowly varying decay (powers of a
    logarithm) never reaches that level inside the float range, so a second
    route accepts a log-log elasticity ``d log R / d log|log x|`` of at most
    ``-0.25`` over the last two samples; a ratio tending to a positive limit
    has elasticity tending to zero.
    """
    lr = np.asarray(log_ratios, dtype=float)
    if np.any(np.isnan(lr)) or np.any(lr == np.inf):
        return False, 0.0
    if lr[-1] < math.log(1e-3):
        fin = lr[np.isfinite(lr)]
        return bool(np.all(np.diff(fin) < 0)), -math.inf
    if not np.all(np.diff(lr) < 0):
        return False, 0.0
    ll = np.log(np.abs(np.log(xs)))
    elasticity = float((lr[-1] - lr[-3]) / (ll[-1] - ll[-3]))
    return elasticity <= -0.25, elasticity


def classify_n_function(phi: YoungFunction) -> bool:
    """N-function test from sampled ratios.

    ``Phi(x)/x`` is sampled at ``1e-2 .. 1e-8`` and ``x/Phi(x)`` at
    ``1e2 .. 1e8``; both must decrease and vanish in the sense of
    :func:`_vanishes`.  The sampled ratios are stored in ``phi.evidence``.
    """
    small = np.logspace(-2, -8, 7)
    large = np.logspace(2, 8, 7)
    evidence = phi.evidence
    if not phi.is_finite:
        evidence.update(n_function=False, reason="not finite")
        return False
    with np.errstate(all="ignore"):
        ls = np.asarray(log_evaluate(phi, small)) - np.log(small)
        ll = np.log(large) - np.asarray(log_evaluate(phi, large))
        mid = np.asarray(log_evaluate(phi, np.logspace(-8, 8, 161)))
    r0, rinf = np.exp(ls), np.exp(ll)
    positive = bool(np.all(mid > -np.inf))
    zero_ok, e0 = _vanishes(ls, small)
    inf_ok, einf = _vanishes(ll, large)
    ok = positive and zero_ok and inf_ok
    evidence.update(n_function=ok, ratio_at_zero=r0.tolist(), ratio_at_infinity=rinf.tolist(),
                    positive=positive, elasticity_zero=e0, elasticity_infinity=einf)
    return ok


def check_delta2(phi: YoungFunction) -> bool:
    """Delta_2 test: ``sup Phi(2x)/Phi(x)`` on ``[1e-8, 1e8]`` must be finite
    and stabilise (sup over the last two decades within 10% of the overall sup
    computed before them)."""
    if not phi.is_finite:
        return False
    xs = np.logspace(-8, 8, 16 * 32 + 1)
    with np.errstate(all="ignore"):
        logr = np.asarray(log_evaluate(phi, 2 * xs)) - np.asarray(log_evaluate(phi, xs))
    if not np.all(np.isfinite(logr)):
        phi.evidence.update(delta2=False, delta2_ratio=math.inf)
        return False
    tail = xs >= 1e6
    log_sup_all = float(logr.max())
    log_sup_head = float(logr[~tail].max())
    ok = log_sup_all <= log_sup_head + math.log(1.1)
    sup_all = math.exp(log_sup_all) if log_sup_all < _LOG_FLOAT_MAX else math.inf
    phi.evidence.update(delta2=ok, delta2_ratio=sup_all)
    return ok


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def _log_expm1(z: np.ndarray) -> np.ndarray:
    """``log(e^z - 1)`` for ``z >= 0`` without overflow."""
    z = np.asarray(z, dtype=float)
    with np.errstate(all="ignore"):
        small = np.log(np.expm1(np.minimum(z, 30.0)))
        big = z + np.log1p(-np.exp(-z))
    return np.where(z > 30.0, big, small)


def power(q: float) -> YoungFunction:
    """``x^q / q`` for ``q >= 1``."""
    if q < 1:
        raise DomainError("power family needs q >= 1")

    def complement() -> YoungFunction:
        if q == 1:
            return linf()
        return power(q / (q - 1.0))

    return YoungFunction(
        log_eval=lambda x: q * np.log(x) - math.log(q),
        label="power(q=%g)" % q,
        closed_inverse=lambda y: (q * y) ** (1.0 / q),
        closed_complement=complement,
        derivative=lambda x: np.asarray(x, dtype=float) ** (q - 1.0),
    )


def explp(p: float) -> YoungFunction:
    """``exp(x^p) - 1``."""
    return YoungFunction(
        log_eval=lambda x: _log_expm1(np.asarray(x) ** p),
        label="explp(p=%g)" % p,
        closed_inverse=lambda y: np.log1p(y) ** (1.0 / p),
        derivative=lambda x: p * np.asarray(x) ** (p - 1) * np.exp(np.asarray(x) ** p),
    )


def expexp(p: float) -> YoungFunction:
    """``exp(exp(x^p)) - e``."""

    def log_eval(x):
        z = np.expm1(np.asarray(x) ** p)            # e^{x^p} - 1
        return 1.0 + _log_expm1(z)                  # log(e (e^z - 1))

    return YoungFunction(
        log_eval=log_eval,
        label="expexp(p=%g)" % p,
        closed_inverse=lambda y: np.log1p(np.log1p(np.asarray(y) / math.e)) ** (1.0 / p),
        derivative=lambda x: (p * np.asarray(x) ** (p - 1) * np.exp(np.asarray(x) ** p)
                              * np.exp(np.exp(np.asarray(x) ** p))),
    )


def loglebesgue(q: float, r: float) -> YoungFunction:
    """``x^q log^r(1 + x)``."""

    def deriv(x):
        x = np.asarray(x, dtype=float)
        lg = np.log1p(x)
        return q * x ** (q - 1) * lg ** r + r * x ** q * lg ** (r - 1) / (1 + x)

    return YoungFunction(
        log_eval=lambda x: q * np.log(x) + r * np.log(np.log1p(x)),
        label="loglebesgue(q=%g,r=%g)" % (q, r),
        derivative=deriv,
    )


def max_power(q: float, r: float) -> YoungFunction:
    """``max(x^q, x^r)``: the smaller exponent governs ``x < 1``, the larger
    one governs ``x > 1``."""
    lo, hi = min(q, r), max(q, r)

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1, lo * x ** (lo - 1), hi * x ** (hi - 1))

    return YoungFunction(
        log_eval=lambda x: np.maximum(lo * np.log(x), hi * np.log(x)),
        label="max-power(q=%g,r=%g)" % (q, r),
        closed_inverse=lambda y: np.minimum(y ** (1.0 / lo), y ** (1.0 / hi)),
        derivative=deriv,
    )


def linf() -> YoungFunction:
    """Zero on ``[0, 1]`` and ``inf`` beyond: its Luxemburg norm is the sup norm."""
    return YoungFunction(
        log_eval=lambda x: np.where(np.asarray(x) <= 1.0, -np.inf, np.inf),
        x_infinity=1.0,
        label="linf",
        closed_inverse=lambda y: np.ones_like(np.asarray(y, dtype=float)),
        closed_complement=lambda: power(1.0),
        derivative=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


def l1_cap_linf() -> YoungFunction:
    """``x`` on ``[0, 1]``, ``inf`` beyond; the space is L^1 intersected with L^inf."""
    return YoungFunction(
        log_eval=lambda x: np.where(np.asarray(x) <= 1.0, np.log(x), np.inf),
        x_infinity=1.0,
        label="l1capinf",
        closed_inverse=lambda y: np.minimum(y, 1.0),
        closed_complement=sumspace,
        derivative=lambda x: np.ones_like(np.asarray(x, dtype=float)),
    )


def sumspace() -> YoungFunction:
    """``max(0, x - 1)``; the space is L^1 + L^inf."""
    return YoungFunction(
        log_eval=lambda x: np.log(np.maximum(np.asarray(x) - 1.0, 0.0)),
        label="sumspace",
        closed_inverse=lambda y: np.asarray(y, dtype=float) + 1.0,
        closed_complement=l1_cap_linf,
        derivative=lambda x: (np.asarray(x) > 1).astype(float),
    )


def power_exp(q: float, p: float) -> YoungFunction:
    """``x^q exp(x^p)``."""
    return YoungFunction(
        log_eval=lambda x: q * np.log(x) + np.asarray(x) ** p,
        label="powexp(q=%g,p=%g)" % (q, p),
        derivative=lambda x: (q * np.asarray(x) ** (q - 1) + p * np.asarray(x) ** (q + p - 1))
        * np.exp(np.asarray(x) ** p),
    )


def power_expexp(q: float, p: float) -> YoungFunction:
    """``x^q exp(exp(x^p))``."""
    return YoungFunction(
        log_eval=lambda x: q * np.log(x) + np.exp(np.asarray(x) ** p),
        label="powexpexp(q=%g,p=%g)" % (q, p),
    )


def from_log_evaluator(log_eval: LogEvaluator, x_infinity: float = math.inf,
                       label: str = "custom") -> YoungFunction:
    return YoungFunction(log_eval=log_eval, x_infinity=x_infinity, label=label)


def with_label(phi: YoungFunction, label: str) -> YoungFunction:
    return replace(phi, label=label)


_FAMILIES = {
    "power": (power, ("q",)),
    "explp": (explp, ("p",)),
    "expexp": (expexp, ("p",)),
    "loglebesgue": (loglebesgue, ("q", "r")),
    "max-power": (max_power, ("q", "r")),
    "powexp": (power_exp, ("q", "p")),
    "powexpexp": (power_expexp, ("q", "p")),
    "linf": (linf, ()),
    "sumspace": (sumspace, ()),
    "l1capinf": (l1_cap_linf, ()),
}


def parse_params(text: str) -> dict[str, float]:
    params: dict[str, float] = {}
    if not text:
        return params
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError("bad parameter %r (expected key=value)" % item)
        params[key.strip()] = float(val)
    return params


def from_spec(spec: str) -> YoungFunction:
    """Build a family from a string such as ``"power:q=2"`` or ``"linf"``.

    A trailing ``@lam`` dilates the result, e.g. ``"linf@2"``.
    """
    spec = spec.strip()
    lam = None
    if "@" in spec:
        spec, lam_text = spec.split("@", 1)
        lam = float(lam_text)
    name, _, rest = spec.partition(":")
    if name not in _FAMILIES:
        raise ValueError("unknown Young's function family %r; known: %s"
                         % (name, ", ".join(sorted(_FAMILIES))))
    ctor, keys = _FAMILIES[name]
    params = parse_params(rest)
    missing = [k for k in keys if k not in params]
    extra = [k for k in params if k not in keys]
    if missing or extra:
        raise ValueError("family %r takes parameters %s; got %s" % (name, keys, sorted(params)))
    phi = ctor(*(params[k] for k in keys))
    return dilate(phi, lam) if lam is not None else phi
