"""Mild solutions of u_t = Lap u + f(u) on a grid by Picard and monotone iteration.

Time nodes are geometric, ``t_j = T r^{M-j}`` for j = 1..M, with ``t_0 = 0``.
An iterate is stored as its node values ``U_j`` together with the local
Duhamel increments ``C_j = int_{t_{j-1}}^{t_j} S(t_j - s) f(u(s)) ds`` of the
iterate it came from, and the start values ``G_j = dt_j f(u(t_{j-1}))`` of
that iterate.  Between nodes it is

    u(s) = S(s - t_{j-1}) U_{j-1} + theta (1 - theta) G_j + theta^2 C_j,

with ``theta = (s - t_{j-1}) / dt_j``.  Expanding the partial increment
``int_{t_{j-1}}^s S(s - r) f(u(r)) dr`` to second order in dt gives
``theta G_j + theta^2 (C_j - G_j)``, which is the blend above, so both the
time variation of f(u) and the heat smoothing are matched to that order.  The interpolant reproduces the heat flow exactly and
is a positive combination of heat steps, so the discrete iteration map
keeps the order of its argument.  The Duhamel part satisfies
``D_j = S(t_j - t_{j-1}) D_{j-1} + C_j``, so only the last interval needs
quadrature.  It is done in ``s = t_j - (t_j - t_{j-1}) e^{-sigma}``, which
turns the narrowing kernel ``S(t_j - s)`` into a smooth profile in sigma.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import fft
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericError
from .grid import GridFunction, luxemburg_norm, save_binary, sup_norm
from .nonlinearity import Nonlinearity, scaled_tail_integral
from .semigroup import heat_apply, kernel_factors, worker_count, wrap_bound
from .wellposed import GlobalBudget
from .young import YoungFunction, generalized_inverse

OVERFLOW_NATS = 600.0
_OVERFLOW = math.exp(OVERFLOW_NATS)


class OrderingError(NumericError):
    """Monotone iterates left their expected order."""


@dataclass(frozen=True)
class SolveConfig:
    T: float = 1.0
    time_steps: int = 32
    duhamel_quad_nodes: int = 48
    picard_tol: float = 1e-10
    picard_max_iters: int = 60
    first_node: float = 1e-3          # t_1 / T

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("T must be positive")
        if self.time_steps < 4:
            raise DomainError("time_steps must be at least 4")
        if not self.picard_tol > 0:
            raise DomainError("picard_tol must be positive")
        if self.duhamel_quad_nodes < 4:
            raise DomainError("duhamel_quad_nodes must be at least 4")
        if not 0 < self.first_node < 1:
            raise DomainError("first_node must lie in (0, 1)")
        if self.picard_max_iters < 1:
            raise DomainError("picard_max_iters must be at least 1")

    def times(self) -> np.ndarray:
        M = self.time_steps
        r = self.first_node ** (1.0 / (M - 1))
        t = self.T * r ** (M - np.arange(1, M + 1, dtype=float))
        t[-1] = self.T
        return t

    def refined(self) -> "SolveConfig":
        """Half the geometric step (same first and last node) and twice the
        s-quadrature nodes."""
        return SolveConfig(self.T, 2 * self.time_steps - 1, 2 * self.duhamel_quad_nodes,
                           self.picard_tol, self.picard_max_iters, self.first_node)


NormSpec = Union[YoungFunction, str, None]


def _trajectory_norm(u: np.ndarray, template: GridFunction, which: NormSpec) -> float:
    if which is None or isinstance(which, str):
        return float(np.max(np.abs(u)))
    return luxemburg_norm(template.with_samples(u), which)


@dataclass
class SolveReport:
    times: np.ndarray
    trajectory: list                        # (t_j, GridFunction)
    contraction_ratios: list
    distances: list
    converged: bool
    iterations: int
    envelope_violation: float
    envelope_factor: float
    decay_margin: Optional[float]
    decay_ratios: Optional[list]
    blow_up: bool
    blow_up_time: Optional[float]
    config: SolveConfig
    nonlinearity: str
    norm_label: str
    notes: list = field(default_factory=list)
    decay_check: Optional[dict] = None

    def sup_norms(self) -> np.ndarray:
        return np.array([sup_norm(u) for _, u in self.trajectory])

    def final(self) -> Optional[GridFunction]:
        return self.trajectory[-1][1] if self.trajectory else None

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "nonlinearity": self.nonlinearity,
            "norm": self.norm_label,
            "times": [float(t) for t, _ in self.trajectory],
            "sup_norms": [float(v) for v in self.sup_norms()],
            "contraction_ratios": [float(r) for r in self.contraction_ratios],
            "distances": [float(d) for d in self.distances],
            "converged": self.converged,
            "iterations": self.iterations,
            "envelope_violation": self.envelope_violation,
            "envelope_factor": self.envelope_factor,
            "decay_margin": self.decay_margin,
            "decay_ratios": self.decay_ratios,
            "blow_up": self.blow_up,
            "blow_up_time": self.blow_up_time,
            "decay_check": self.decay_check,
            "notes": list(self.notes),
        }

    def save(self, directory: Union[str, Path], stem: str = "u") -> Path:
        """One grid binary per node plus ``manifest.json``."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for j, (_, u) in enumerate(self.trajectory, start=1):
            name = "%s_%03d.bin" % (stem, j)
            save_binary(u, out / name)
            files.append(name)
        manifest = self.to_dict()
        manifest["files"] = files
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2))
        return path


# ---------------------------------------------------------------------------
# discrete Duhamel map
# ---------------------------------------------------------------------------

class _Propagator:
    """Padded FFT heat steps on a fixed lattice, with cached 1D kernel factors."""

    def __init__(self, template: GridFunction):
        self.dim = template.dim
        self.n = template.points_per_axis
        self.h = template.spacing
        self.shape = (2 * self.n,) * self.dim
        self.crop = tuple(slice(0, self.n) for _ in range(self.dim))
        self._factors: dict = {}
        self.workers = worker_count()
        m = 2 * self.n
        xi = 2 * math.pi * np.fft.fftfreq(m, d=self.h)
        self.xi2_max = self.dim * float(np.max(xi ** 2))

    def hat(self, t: float) -> np.ndarray:
        f = self._factors.get(t)
        if f is None:
            f = kernel_factors(self.n, self.h, t)
            self._factors[t] = f
        full, half = f
        if self.dim == 1:
            return half
        if self.dim == 2:
            return full[:, None] * half[None, :]
        return full[:, None, None] * full[None, :, None] * half[None, None, :]

    def forward(self, u: np.ndarray) -> np.ndarray:
        return fft.rfftn(u, s=self.shape, workers=1)

    def backward(self, uhat: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(fft.irfftn(uhat, s=self.shape, workers=1)[self.crop])

    def apply(self, u: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return u
        return self.backward(self.forward(u) * self.hat(t))


def _sigma_rule(delta: float, xi2_max: float, nodes: int):
    """Composite Gauss-Legendre nodes in sigma on [0, sigma_max] for the last
    interval, and the weight of the remainder beyond sigma_max."""
    sigma_max = max(math.log(max(delta * xi2_max, 1.0)) + 10.0, 10.0)
    panels = max(1, nodes // 8)
    order = max(2, nodes // panels)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, sigma_max, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
    halves = 0.5 * np.diff(edges)[:, None]
    sig = (mids + halves * x).ravel()
    wts = (halves * w).ravel()
    return sig, wts, delta * math.exp(-sigma_max)


@dataclass
class _Iterate:
    U: list          # node values, U[0] is the data at t = 0
    C: list          # local Duhamel increments, C[0] unused
    G: list          # dt_j f(u(t_{j-1})) of the source iterate, G[0] unused


class _Duhamel:
    def __init__(self, nl: Nonlinearity, phi0: GridFunction, cfg: SolveConfig):
        self.nl = nl
        self.phi0 = phi0
        self.cfg = cfg
        self.prop = _Propagator(phi0)
        self.times = cfg.times()
        self.nodes = np.concatenate([[0.0], self.times])
        self.linear = [phi0.samples] + [self.prop.apply(phi0.samples, float(t)) for t in self.times]
        self.rules = []
        for j in range(1, len(self.nodes)):
            delta = float(self.nodes[j] - self.nodes[j - 1])
            sig, wts, rem = _sigma_rule(delta, self.prop.xi2_max, cfg.duhamel_quad_nodes)
            gap = delta * np.exp(-sig)                  # t_j - s
            self.rules.append((delta, gap, wts * gap, rem))

    def heat_iterate(self, data: np.ndarray, scale: float = 1.0) -> _Iterate:
        """``scale * S(t) data`` with zero increments (exact for the heat flow)."""
        U = [scale * data] + [scale * self.prop.apply(data, float(t)) for t in self.times]
        zeros = [None] + [np.zeros_like(data)] * len(self.times)
        return _Iterate(U, zeros, list(zeros))

    def increment(self, it: _Iterate, j: int):
        """``(C_j, G_j)`` of the image of ``it``, or None on overflow."""
        delta, gap, wts, rem = self.rules[j - 1]
        prev_hat = self.prop.forward(it.U[j - 1])
        acc = None
        for g, w in zip(gap, wts):
            tau = delta - g                              # s - t_{j-1}
            th = tau / delta
            u = self.prop.backward(prev_hat * self.prop.hat(float(tau))) if tau > 0 else it.U[j - 1]
            u = u + (th * (1 - th)) * it.G[j] + (th * th) * it.C[j]
            if not np.all(np.abs(u) < _OVERFLOW):
                return None
            with np.errstate(all="ignore"):
                fu = self.nl(u)
            if not np.all(np.isfinite(fu)):
                return None
            term = self.prop.forward(fu) * (w * self.prop.hat(float(g)))
            acc = term if acc is None else acc + term
        with np.errstate(all="ignore"):
            tail = self.nl(it.U[j])
            start = self.nl(it.U[j - 1])
        if not (np.all(np.isfinite(tail)) and np.all(np.isfinite(start))):
            return None
        return self.prop.backward(acc) + rem * tail, delta * start

    def apply(self, it: _Iterate, upto: int) -> tuple[_Iterate, Optional[int]]:
        """The image under the Duhamel map for nodes 1..upto, plus the first
        node index at which the new values overflow (None if none)."""
        idx = list(range(1, upto + 1))
        if self.prop.workers > 1 and len(idx) > 1:
            with ThreadPoolExecutor(max_workers=self.prop.workers) as pool:
                results = list(pool.map(lambda j: self.increment(it, j), idx))
        else:
            results = [self.increment(it, j) for j in idx]
        U, C, G = [self.phi0.samples], [None], [None]
        D = np.zeros_like(self.phi0.samples)
        for j, res in zip(idx, results):
            if res is None:
                return _Iterate(U, C, G), j
            inc, start = res
            D = self.prop.apply(D, float(self.nodes[j] - self.nodes[j - 1])) + inc
            Uj = self.linear[j] + D
            if not np.all(np.abs(Uj) < _OVERFLOW):
                return _Iterate(U, C, G), j
            U.append(Uj)
            C.append(inc)
            G.append(start)
        return _Iterate(U, C, G), None


def _distance(a: _Iterate, b: _Iterate, template: GridFunction, which: NormSpec) -> float:
    m = min(len(a.U), len(b.U))
    if m <= 1:
        return 0.0
    return max(_trajectory_norm(a.U[j] - b.U[j], template, which) for j in range(1, m))


def _truncate(it: _Iterate, m: int) -> _Iterate:
    return _Iterate(it.U[:m + 1], it.C[:m + 1], it.G[:m + 1])


def _envelope(duh: _Duhamel, it: _Iterate, factor: float) -> float:
    worst = 0.0
    absphi = np.abs(duh.phi0.samples)
    for j in range(1, len(it.U)):
        w = factor * duh.prop.apply(absphi, float(duh.times[j - 1]))
        worst = max(worst, float(np.max(np.abs(it.U[j]) - w)))
    return max(worst, 0.0)


def _decay(duh: _Duhamel, it: _Iterate, phi_fn: NormSpec):
    if not isinstance(phi_fn, YoungFunction):
        return None, None
    n = duh.phi0.dim
    ratios = []
    for j in range(1, len(it.U)):
        t = float(duh.times[j - 1])
        inv = float(generalized_inverse(phi_fn, t ** (-n / 2)))
        ratios.append(float(np.max(np.abs(it.U[j]))) / inv)
    return (max(ratios) if ratios else None), ratios


def _report(duh, it, ratios, dists, converged, k, factor, phi_fn, blow_t, notes) -> SolveReport:
    trajectory = [(float(duh.times[j - 1]), duh.phi0.with_samples(it.U[j]))
                  for j in range(1, len(it.U))]
    margin, dr = _decay(duh, it, phi_fn)
    label = phi_fn.label if isinstance(phi_fn, YoungFunction) else "sup"
    if wrap_bound(duh.phi0.half_width, duh.cfg.T) > 1e-8:
        notes = notes + ["heat steps up to T lose mass through the box boundary (exp(-L^2/16T) = %.1e)"
                         % wrap_bound(duh.phi0.half_width, duh.cfg.T)]
    h2, t1 = duh.phi0.spacing ** 2, float(duh.times[0])
    if h2 > 4.0 * t1:
        # the sampled kernel is far from a semigroup on steps shorter than h^2
        notes = notes + ["grid spacing does not resolve the first time node (h^2 = %.2e > 4 t_1 = %.2e)"
                         % (h2, 4.0 * t1)]
    return SolveReport(duh.times, trajectory, ratios, dists, converged, k, _envelope(duh, it, factor),
                       factor, margin, dr, blow_t is not None, blow_t, duh.cfg, duh.nl.label, label,
                       notes)


def _iterate(duh: _Duhamel, start: _Iterate, phi_fn: NormSpec, factor: float,
             check=None) -> tuple[SolveReport, _Iterate]:
    cfg = duh.cfg
    it = start
    upto = len(duh.times)
    prev = max((_trajectory_norm(u, duh.phi0, phi_fn) for u in it.U[1:]), default=0.0)
    ratios, dists, notes = [], [], []
    blow_t = None
    converged = False
    k = 0
    for k in range(1, cfg.picard_max_iters + 1):
        new, bad = duh.apply(it, upto)
        if bad is not None:
            blow_t = float(duh.times[bad - 1])
            upto = bad - 1
            notes.append("overflow past %g nats near t=%.4g in iteration %d" % (OVERFLOW_NATS, blow_t, k))
            it = _truncate(it, upto)
            if upto == 0:
                break
        if check is not None:
            check(it, new)
        d = _distance(new, it, duh.phi0, phi_fn)
        ratios.append(d / prev if prev > 0 else 0.0)
        dists.append(d)
        it, prev = new, d
        if d < cfg.picard_tol:
            converged = True
            break
    if not converged:
        notes.append("no convergence after %d iterations" % k)
    return _report(duh, it, ratios, dists, converged, k, factor, phi_fn, blow_t, notes), it


def picard_solve(nl: Nonlinearity, phi0: GridFunction, cfg: SolveConfig,
                 phi_fn: NormSpec = None, envelope_factor: float = 2.0) -> SolveReport:
    """Picard iteration ``u_{k+1} = F(u_k; phi)`` from ``u_0(t) = S(t) phi``.

    The stopping metric is ``sup_j ||u_{k+1}(t_j) - u_k(t_j)||_Phi`` (Luxemburg
    norm of ``phi_fn``, or the sup norm when ``phi_fn`` is None).  An overflow
    past 600 nats at a node sets ``blow_up`` and cuts the trajectory before
    that node.
    """
    duh = _Duhamel(nl, phi0, cfg)
    rep, _ = _iterate(duh, duh.heat_iterate(phi0.samples), phi_fn, envelope_factor)
    return rep


# ---------------------------------------------------------------------------
# monotone iteration
# ---------------------------------------------------------------------------

@dataclass
class MonotoneReport:
    upper: SolveReport
    lower: SolveReport
    ordering_violation: float
    gap: float                       # sup over nodes of |w - v| at the end

    def to_dict(self) -> dict:
        return {"upper": self.upper.to_dict(), "lower": self.lower.to_dict(),
                "ordering_violation": self.ordering_violation, "gap": self.gap}


ORDER_TOL = 1e-10


def monotone_iterate(nl: Nonlinearity, phi0: GridFunction, cfg: SolveConfig,
                     phi_fn: NormSpec = None) -> MonotoneReport:
    """Decreasing iteration from ``w_0 = 2 S(t) phi^+`` and increasing
    iteration from ``v_0 = 2 S(t) phi^-`` (``phi^- = min(phi, 0)``).

    Every step checks ``v_k <= v_{k+1} <= w_{k+1} <= w_k`` at the nodes to
    ``1e-10 * ||phi||_inf`` and raises OrderingError otherwise.
    """
    scale = max(sup_norm(phi0), 1e-300)
    probe = np.linspace(-2 * scale, 2 * scale, 401)
    if np.any(nl.f_prime(probe) < -1e-12):
        raise DomainError("monotone iteration needs f increasing on the data range")
    duh = _Duhamel(nl, phi0, cfg)
    tol = ORDER_TOL * scale
    worst = [0.0]
    history = {"w": [], "v": []}

    def checker(name):
        sign = 1.0 if name == "w" else -1.0       # w must decrease, v must increase

        def check(old, new):
            for j in range(1, min(len(old.U), len(new.U))):
                worst[0] = max(worst[0], float(np.max(sign * (new.U[j] - old.U[j]))))
            history[name].append(new)
            if worst[0] > tol:
                raise OrderingError("%s iterates lost monotonicity by %.3e" % (name, worst[0]))
        return check

    w0 = duh.heat_iterate(np.maximum(phi0.samples, 0.0), 2.0)
    v0 = duh.heat_iterate(np.minimum(phi0.samples, 0.0), 2.0)
    upper, w_fin = _iterate(duh, w0, phi_fn, 2.0, checker("w"))
    lower, v_fin = _iterate(duh, v0, phi_fn, 2.0, checker("v"))
    # sandwich: every lower iterate below every upper iterate of the same index
    for a, b in zip(history["v"], history["w"]):
        m = min(len(a.U), len(b.U))
        for j in range(1, m):
            worst[0] = max(worst[0], float(np.max(a.U[j] - b.U[j])))
    if worst[0] > tol:
        raise OrderingError("lower iterate exceeds upper iterate by %.3e" % worst[0])
    m = min(len(w_fin.U), len(v_fin.U))
    gap = max((float(np.max(np.abs(w_fin.U[j] - v_fin.U[j]))) for j in range(1, m)), default=0.0)
    return MonotoneReport(upper, lower, worst[0], gap)


# ---------------------------------------------------------------------------
# small-data global behaviour
# ---------------------------------------------------------------------------

def global_decay_experiment(nl: Nonlinearity, phi_fn: YoungFunction, n: int, budget: GlobalBudget,
                            shape: GridFunction, cfg: SolveConfig,
                            fraction: float = 1 - 1e-3) -> SolveReport:
    """Scale ``shape`` to ``fraction * budget.radius`` in the Phi norm, solve,
    and check ``||u(t)||_inf <= lam Phi^{-1}(t^{-n/2})`` at every node and
    ``||u(T)||_inf < ||u(t_1)||_inf``.  The envelope uses ``A S(t)|phi|``."""
    if shape.dim != n:
        raise DomainError("shape has dimension %d, expected %d" % (shape.dim, n))
    k = luxemburg_norm(shape, phi_fn)
    if not k > 0:
        raise DomainError("shape must be nonzero")
    data = shape * (fraction * budget.radius / k)
    rep = picard_solve(nl, data, cfg, phi_fn, envelope_factor=budget.A)
    lam = budget.lambda_star
    bound = lam * (1 + 1e-3)
    offending = [(t, r) for (t, _), r in zip(rep.trajectory, rep.decay_ratios or []) if r > bound]
    sups = rep.sup_norms()
    decays = bool(len(sups) == len(rep.times) and sups[-1] < sups[0])
    rep.decay_check = {
        "lambda": lam, "A": budget.A, "radius": budget.radius, "data_norm": fraction * budget.radius,
        "bound": bound, "violations": offending, "final_below_first": decays,
        "final_over_peak": float(sups[-1] / max(sups)) if len(sups) else None,
        "passed": bool(rep.converged and not offending and decays and not rep.blow_up),
    }
    return rep


# ---------------------------------------------------------------------------
# critical datum and blow-up probing
# ---------------------------------------------------------------------------

@dataclass
class CriticalDatum:
    grid: GridFunction
    gamma: float
    R: float
    capped: int
    cap_value: float
    origin_value: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "R": self.R, "capped": self.capped, "cap_value": self.cap_value,
                "origin_value": self.origin_value, "sup": sup_norm(self.grid), "notes": self.notes}


def _log_F(nl: Nonlinearity, u: float) -> float:
    return math.log(scaled_tail_integral(nl, u)) - float(nl.log_f(np.array(u)))


def _overflow_level(nl: Nonlinearity) -> float:
    """Largest u with ``log f(u) <= 600`` (by bisection in log u)."""
    lo, hi = -50.0, 50.0
    with np.errstate(all="ignore"):
        if float(nl.log_f(np.array(math.exp(hi)))) <= OVERFLOW_NATS:
            return math.exp(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(nl.log_f(np.array(math.exp(mid)))) > OVERFLOW_NATS:
                hi = mid
            else:
                lo = mid
    return math.exp(lo)


def critical_datum(nl: Nonlinearity, gamma: float, R: float, dim: int, half_width: float,
                   points: int, table_points: int = 400) -> CriticalDatum:
    """``phi(x) = F^{-1}(gamma |x|^2)`` on ``|x| <= R``, zero outside.

    F is tabulated on a log grid in u and inverted by bisection on a monotone
    (PCHIP) interpolant of ``log F`` against ``log u``.  Values above the
    level where ``log f`` reaches 600 nats are capped and counted.  The cell
    at the origin uses the radius h/2.
    """
    if not (gamma > 0 and R > 0):
        raise DomainError("gamma and R must be positive")
    if nl.log_f is None:
        raise DomainError("the critical datum needs a log-described positone nonlinearity")
    template = GridFunction(dim, half_width, points, np.zeros((points,) * dim))
    rad = template.radius()
    h = template.spacing
    support = rad <= R
    r_eff = np.where(rad > 0, rad, 0.5 * h)
    log_y = np.log(gamma) + 2 * np.log(r_eff[support])
    cap = _overflow_level(nl)
    log_cap = math.log(cap)
    y_lo, y_hi = float(np.min(log_y)), float(np.max(log_y))

    # bracket in log u: log F decreasing from above y_hi down past y_lo (or the cap)
    lo = 0.0
    last = _log_F(nl, 1.0)
    while last < y_hi:
        lo -= 1.0
        cur = _log_F(nl, math.exp(lo))
        if lo < -600 or cur - last < 1e-9:
            raise NumericError("F does not reach gamma R^2 = %g on (0, inf)" % math.exp(y_hi))
        last = cur
    hi = lo + 1.0
    while hi < log_cap and _log_F(nl, math.exp(hi)) > y_lo:
        hi += 1.0
    hi = min(hi, log_cap)
    grid_u = np.linspace(lo, hi, table_points)
    table = np.array([_log_F(nl, math.exp(v)) for v in grid_u])
    if np.any(np.diff(table) >= 0):
        raise NumericError("tabulated F is not strictly decreasing")
    interp = PchipInterpolator(grid_u, table)

    target = np.maximum(log_y, table[-1])
    capped = int(np.sum(log_y < table[-1]))
    a = np.full(target.shape, lo)
    b = np.full(target.shape, hi)
    for _ in range(60):
        mid = 0.5 * (a + b)
        above = interp(mid) > target
        a = np.where(above, mid, a)
        b = np.where(above, b, mid)
    vals = np.exp(0.5 * (a + b))
    samples = np.zeros(template.samples.shape)
    samples[support] = vals
    origin = float(samples[(points // 2,) * dim])
    notes = []
    if capped:
        notes.append("%d samples capped at u = %.6g where log f reaches %g nats"
                     % (capped, cap, OVERFLOW_NATS))
    return CriticalDatum(template.with_samples(samples), gamma, R, capped, float(math.exp(hi)),
                         origin, notes)


@dataclass
class BlowUpReport:
    attempts: list
    largest_converged_T: Optional[float]
    status: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def blow_up_probe(nl: Nonlinearity, datum: GridFunction, phi_fn: NormSpec, cfg: SolveConfig,
                  halvings: int = 6) -> BlowUpReport:
    """Picard solves on ``[0, T / 2^k]`` for k = 0..halvings until one converges.

    Persistent overflow or non-convergence over all windows is labelled
    ``consistent with nonexistence``; it is numerical evidence only.
    """
    if np.any(datum.samples < 0):
        raise DomainError("blow-up probing needs nonnegative data")
    attempts = []
    largest = None
    for k in range(halvings + 1):
        T = cfg.T / 2 ** k
        sub = SolveConfig(T, cfg.time_steps, cfg.duhamel_quad_nodes, cfg.picard_tol,
                          cfg.picard_max_iters, cfg.first_node)
        rep = picard_solve(nl, datum, sub, phi_fn)
        sups = rep.sup_norms()
        attempts.append({"T": T, "converged": rep.converged, "blow_up": rep.blow_up,
                         "blow_up_time": rep.blow_up_time, "iterations": rep.iterations,
                         "first_node_sup": float(sups[0]) if len(sups) else None,
                         "last_sup": float(sups[-1]) if len(sups) else None,
                         "nodes_kept": len(sups)})
        if rep.converged and not rep.blow_up:
            largest = T
            break
    if largest == cfg.T:
        status = "converged"
    elif largest is not None:
        status = "converged on a shorter window"
    else:
        status = "consistent with nonexistence"
    notes = ["numerical evidence only; a finite grid cannot prove nonexistence"]
    return BlowUpReport(attempts, largest, status, notes)


def first_step_refinement(nl: Nonlinearity, gamma: float, R: float, dim: int, half_width: float,
                          points: list, cfg: SolveConfig) -> list[dict]:
    """Sup norms of the critical datum and of the solution at the first node
    for a sequence of grids."""
    rows = []
    for N in points:
        cd = critical_datum(nl, gamma, R, dim, half_width, N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = picard_solve(nl, cd.grid, cfg)
        sups = rep.sup_norms()
        rows.append({"N": N, "datum_sup": sup_norm(cd.grid), "capped": cd.capped,
                     "first_node_sup": float(sups[0]) if len(sups) else None,
                     "blow_up": rep.blow_up, "converged": rep.converged})
    return rows


def heat_reference(phi0: GridFunction, times) -> list[GridFunction]:
    """``S(t) phi0`` at the given times (reference for the linear oracle)."""
    return [heat_apply(phi0, float(t), warn=False) for t in times]
