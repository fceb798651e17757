"""The heat semigroup on grid data and the smoothing estimates it satisfies.

``heat_apply`` is a linear (not circular) convolution with the Gaussian
kernel, done with FFTs on a grid padded to (2N)^n.  The kernel-norm and
induction-bound routines work on the radial profile of the kernel instead
of a grid, so they can be checked at arbitrary precision.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy import fft, integrate, special

from .errors import DomainError, NumericError
from .grid import GridFunction, luxemburg_norm, sup_norm
from .young import YoungFunction, generalized_inverse, log_evaluate, values_saturating


class AccuracyWarning(UserWarning):
    """The periodic wrap error of a heat step may exceed 1e-8."""


def worker_count() -> int:
    """Worker threads for FFTs, bounded by ``ORLICZ_HEAT_THREADS``."""
    env = os.environ.get("ORLICZ_HEAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def wrap_bound(half_width: float, t: float) -> float:
    return math.exp(-half_width ** 2 / (16.0 * t)) if t > 0 else 0.0


_KERNEL_CACHE: dict = {}


def kernel_factors(n: int, h: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """FFT and rFFT of the unit-mass 1D kernel on the padded lattice of 2n points."""
    m = 2 * n
    offsets = h * np.fft.fftfreq(m, d=1.0 / m)          # 0, h, ..., -h in FFT order
    kern = np.exp(-offsets ** 2 / (4.0 * t))
    kern /= kern.sum()
    return fft.fft(kern), fft.rfft(kern)


def kernel_hat(dim: int, n: int, h: float, t: float) -> np.ndarray:
    """rFFT of the sampled n-dimensional kernel, built from its 1D factors
    (the Gaussian and its normalisation both factorise)."""
    full, half = kernel_factors(n, h, t)
    if dim == 1:
        return half
    if dim == 2:
        return full[:, None] * half[None, :]
    return full[:, None, None] * full[None, :, None] * half[None, None, :]


def _kernel_hat(dim: int, n: int, h: float, t: float) -> np.ndarray:
    key = (dim, n, h, t)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    hat = kernel_hat(dim, n, h, t)
    if len(_KERNEL_CACHE) > 64:
        _KERNEL_CACHE.clear()
    _KERNEL_CACHE[key] = hat
    return hat


def heat_apply(u: GridFunction, t: float, warn: bool = True) -> GridFunction:
    """``S(t) u = G(., t) * u`` with the sampled kernel renormalised to unit mass."""
    if t < 0 or math.isnan(t):
        raise DomainError("heat_apply needs t >= 0")
    if t == 0:
        return u
    if warn and wrap_bound(u.half_width, t) > 1e-8:
        warnings.warn("wrap bound exp(-L^2/16t) = %.2e exceeds 1e-8 (L=%g, t=%g)"
                      % (wrap_bound(u.half_width, t), u.half_width, t), AccuracyWarning,
                      stacklevel=2)
    n, dim = u.points_per_axis, u.dim
    hat = _kernel_hat(dim, n, u.spacing, float(t))
    shape = (2 * n,) * dim
    uhat = fft.rfftn(u.samples, s=shape, workers=worker_count())
    full = fft.irfftn(uhat * hat, s=shape, workers=worker_count())
    out = full[tuple(slice(0, n) for _ in range(dim))]
    return u.with_samples(np.ascontiguousarray(out))


def heat_apply_many(u: GridFunction, times: Iterable[float]) -> list[GridFunction]:
    return [heat_apply(u, t, warn=False) for t in times]


# ---------------------------------------------------------------------------
# norm of the kernel
# ---------------------------------------------------------------------------

def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def _gauss_legendre_panels(a: float, b: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
    halves = 0.5 * np.diff(edges)[:, None]
    return (mids + halves * x).ravel(), (halves * w).ravel()


_W_MAX = 40.0


def kernel_modular(theta: YoungFunction, t: float, dim: int, k: float,
                   route: str = "radial", panels: int = 256) -> float:
    """``int Theta(G(x, t) / k) dx`` over R^n.

    ``route="radial"``: composite Gauss-Legendre in ``w = |x| / (2 sqrt t)``
    on ``[0, 40]``, so ``G/k = A exp(-w^2)`` with ``A = (4 pi t)^{-n/2} / k``.
    ``route="cov"``: the substitution ``y = A exp(-s)``, giving
    ``omega_n 2^{n-1} t^{n/2} int_0^inf Theta(A e^{-s}) s^{n/2-1} ds``,
    integrated adaptively with an algebraic weight for the endpoint.
    """
    amp = (4 * math.pi * t) ** (-dim / 2) / k
    if amp > theta.x_infinity:
        return math.inf
    if route == "radial":
        # the integrand concentrates where A e^{-w^2} is O(1); cap the range there
        w_hi = min(_W_MAX, math.sqrt(max(math.log(amp), 0.0) + 800.0))
        w, wt = _gauss_legendre_panels(0.0, w_hi, panels)
        vals = values_saturating(theta, amp * np.exp(-w ** 2))
        if np.any(np.isinf(vals)):
            return math.inf
        integral = float(np.sum(wt * vals * w ** (dim - 1)))
        return sphere_area(dim) * (2 * math.sqrt(t)) ** dim * integral
    if route == "cov":
        beta = dim / 2 - 1

        def g(s):
            return float(values_saturating(theta, np.array(amp * math.exp(-s))))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(beta, 0.0),
                                     epsabs=0.0, epsrel=1e-12, limit=200)
            s_break = max(1.0, math.log(amp) + 1.0) if amp > 1 else 1.0
            mid = 0.0
            if s_break > 1.0:
                mid, _ = integrate.quad(lambda s: g(s) * s ** beta, 1.0, s_break,
                                        epsabs=0.0, epsrel=1e-12, limit=400)
            tail, _ = integrate.quad(lambda s: g(s) * s ** beta, s_break, np.inf,
                                     epsabs=0.0, epsrel=1e-12, limit=400)
        total = head + mid + tail
        if not math.isfinite(total):
            return math.inf
        return sphere_area(dim) * 2 ** (dim - 1) * t ** (dim / 2) * total
    raise ValueError("unknown route %r" % route)


def kernel_orlicz_norm(theta: YoungFunction, t: float, dim: int, route: str = "radial",
                       panels: int = 256, rtol: float = 1e-11) -> float:
    """Luxemburg norm of ``G(., t)`` in ``L^Theta(R^n)`` by bisection in k."""
    if not t > 0:
        raise DomainError("kernel_orlicz_norm needs t > 0")

    def over(k: float) -> bool:
        return kernel_modular(theta, t, dim, k, route=route, panels=panels) > 1.0

    k_hi = 1.0
    while over(k_hi):
        k_hi *= 2.0
        if k_hi > 1e300:
            raise NumericError("kernel modular never drops below 1 (%s)" % theta.label)
    k_lo = k_hi
    while True:
        k_lo *= 0.5
        if k_lo < 1e-300:
            return 0.0
        if over(k_lo):
            break
        k_hi = k_lo
    for _ in range(300):
        if k_hi - k_lo <= rtol * k_hi:
            break
        mid = 0.5 * (k_lo + k_hi)
        if over(mid):
            k_lo = mid
        else:
            k_hi = mid
    return k_hi


def kernel_bound_ratio(theta: YoungFunction, t: float, dim: int, **kw) -> float:
    """``||G(., t)||_Theta / (t^{-n/2} / Theta^{-1}(t^{-n/2}))``."""
    s = t ** (-dim / 2)
    bound = s / float(generalized_inverse(theta, s))
    return kernel_orlicz_norm(theta, t, dim, **kw) / bound


# ---------------------------------------------------------------------------
# induction bounds
# ---------------------------------------------------------------------------

@dataclass
class InductionRow:
    j: int
    I: float
    I_ratio: float          # I_j / ((j-1)! Theta(a))
    J: float
    J_ratio: float          # J_j / Theta(a)


def _log_weighted_integral(theta: YoungFunction, a: float, power: float) -> float:
    """``int_0^a Theta(y)/y (log(a/y))^power dy = int_0^inf Theta(a e^{-s}) s^power ds``."""
    log_top = float(log_evaluate(theta, a))

    def g(s):
        # scaled by Theta(a) so steep Theta stay in range
        return math.exp(float(log_evaluate(theta, a * math.exp(-s))) - log_top)

    # Theta(a e^{-s}) / Theta(a) decays like exp(-elasticity * s) near s = 0
    delta = 1e-6
    elasticity = (log_top - float(log_evaluate(theta, a * math.exp(-delta)))) / delta
    edges = [0.0]
    if elasticity > 1.0:
        edges += [min(1.0, c / elasticity) for c in (1.0, 8.0, 40.0)]
    edges = sorted(set(edges + [1.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            total, _ = integrate.quad(g, 0.0, edges[1], weight="alg", wvar=(power, 0.0),
                                      epsabs=0.0, epsrel=1e-12, limit=200)
            for lo, hi in zip(edges[1:-1], edges[2:]):
                total += integrate.quad(lambda s: g(s) * s ** power, lo, hi,
                                        epsabs=0.0, epsrel=1e-12, limit=200)[0]
            total += integrate.quad(lambda s: g(s) * s ** power, 1.0, np.inf,
                                    epsabs=0.0, epsrel=1e-12, limit=400)[0]
        except integrate.IntegrationWarning as exc:
            raise NumericError("log-weighted integral did not converge: %s" % exc) from None
    return total * math.exp(log_top)


def verify_induction_bounds(theta: YoungFunction, a: float, j_max: int = 6) -> list[InductionRow]:
    """``I_j(a) <= (j-1)! Theta(a)`` and ``J_j(a) / Theta(a)`` for ``j <= j_max``."""
    if not (0 < a < theta.x_infinity):
        raise DomainError("need 0 < a < x_inf")
    if not 1 <= j_max <= 6:
        raise DomainError("j_max must be between 1 and 6")
    theta_a = math.exp(log_evaluate(theta, a))
    rows = []
    for j in range(1, j_max + 1):
        i_val = _log_weighted_integral(theta, a, j - 1.0)
        j_val = _log_weighted_integral(theta, a, j - 1.5)
        rows.append(InductionRow(j, i_val, i_val / (math.factorial(j - 1) * theta_a),
                                 j_val, j_val / theta_a))
    return rows


# ---------------------------------------------------------------------------
# smoothing sweep
# ---------------------------------------------------------------------------

NormSpec = Union[YoungFunction, str]


def _norm(u: GridFunction, which: NormSpec) -> float:
    if isinstance(which, str):
        if which in ("inf", "linf-marker"):
            return sup_norm(u)
        raise ValueError("unknown norm marker %r" % which)
    return luxemburg_norm(u, which)


def _inverse(which: NormSpec, y: float) -> float:
    if isinstance(which, str):
        return 1.0                       # the sup norm marker: (Phi^inf)^{-1} = 1
    return float(generalized_inverse(which, y))


@dataclass
class SmoothingReport:
    t_grid: list[float]
    norms: list[float]
    bounds: list[float]
    ratios: list[float]
    fitted_constant: float
    data_norm: float
    small_t_ratio: float
    labels: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "norm", "bound", "ratio"])
            for row in zip(self.t_grid, self.norms, self.bounds, self.ratios):
                w.writerow([repr(float(v)) for v in row])

    def to_dict(self) -> dict:
        return {"t_grid": self.t_grid, "norms": self.norms, "bounds": self.bounds,
                "ratios": self.ratios, "fitted_constant": self.fitted_constant,
                "data_norm": self.data_norm, "small_t_ratio": self.small_t_ratio,
                "labels": self.labels}


def smoothing_envelope(phi: NormSpec, psi: NormSpec, t: float, dim: int) -> float:
    """``Phi^{-1}(t^{-n/2}) / Psi^{-1}(t^{-n/2})``."""
    s = t ** (-dim / 2)
    return _inverse(phi, s) / _inverse(psi, s)


def smoothing_sweep(phi: NormSpec, psi: NormSpec, data: GridFunction,
                    t_grid: Iterable[float]) -> SmoothingReport:
    """Measure ``||S(t) data||_Psi`` against the envelope times ``||data||_Phi``.

    ``psi="inf"`` selects the sup norm.  The ratio at the smallest t is
    reported separately as a trend diagnostic for the vanishing-ratio claim.
    """
    ts = [float(t) for t in t_grid]
    dn = _norm(data, phi)
    if not dn > 0:
        raise DomainError("data has zero norm")
    norms, bounds, ratios = [], [], []
    for t in ts:
        val = _norm(heat_apply(data, t, warn=False), psi)
        bound = smoothing_envelope(phi, psi, t, data.dim) * dn
        norms.append(val)
        bounds.append(bound)
        ratios.append(val / bound)
    small = ratios[int(np.argmin(ts))]
    labels = {"phi": phi if isinstance(phi, str) else phi.label,
              "psi": psi if isinstance(psi, str) else psi.label}
    return SmoothingReport(ts, norms, bounds, ratios, float(max(ratios)), dn, small, labels)


def theta_from_pair(phi: YoungFunction, psi: NormSpec, label: Optional[str] = None) -> YoungFunction:
    """Young's function whose inverse is ``x Psi^{-1}(x) / Phi^{-1}(x)``.

    The inverse is inverted numerically; convexity holds when that quotient
    is concave, which the caller is responsible for.
    """
    def inv_theta(x):
        x = np.asarray(x, dtype=float)
        num = 1.0 if isinstance(psi, str) else generalized_inverse(psi, x)
        with np.errstate(all="ignore"):
            return x * num / generalized_inverse(phi, x)

    def log_eval(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty_like(flat)
        for i, v in enumerate(flat):
            if v == 0:
                out[i] = -np.inf
                continue
            lo, hi = 0.0, 1.0
            while inv_theta(hi) < v:
                hi *= 2.0
                if hi > 1e300:
                    break
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if inv_theta(mid) < v:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-13 * hi:
                    break
            out[i] = math.log(hi)
        return out.reshape(x.shape)

    return YoungFunction(log_eval=log_eval, label=label or "theta(%s,%s)" % (
        phi.label, psi if isinstance(psi, str) else psi.label), closed_inverse=inv_theta)
