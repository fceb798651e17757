"""Command-line experiment runner.

Every subcommand writes ``report.json`` (with the effective configuration as
its ``config`` header), a flat ``config.txt`` that reproduces the run, and
one or more CSV data files into ``--out``.

Exit codes: 0 when the experiment completes and its checks hold, 2 when it
completes but a verdict-level check fails (a decay violation, a threshold
split in the wrong place, ...), 1 for usage errors, malformed configuration
files and numerical breakdowns.

Configuration files hold one ``key = value`` pair per line (``#`` starts a
comment).  Keys are option names with dashes or underscores; values use the
same syntax as on the command line.  Command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import grid as G
from . import nonlinearity as NL
from . import semigroup as S
from . import solver as SV
from . import wellposed as W
from . import young as Y
from .errors import NoBudgetError


class UsageError(Exception):
    """Bad command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("%s: %s" % (self.prog, message))


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive, got %r" % text)
    return v


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer, got %r" % text)
    return v


def even_int(text: str) -> int:
    v = positive_int(text)
    if v % 2:
        raise argparse.ArgumentTypeError("grid size must be even, got %r" % text)
    return v


def young_spec(text: str) -> str:
    try:
        Y.from_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


def norm_spec(text: str) -> str:
    return text if text == "inf" else young_spec(text)


def nl_spec(text: str) -> str:
    if not text.startswith("rapid"):
        try:
            NL.from_spec(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    return text


def shape_spec(text: str) -> str:
    name, _, rest = text.partition(":")
    if name not in SHAPES:
        raise argparse.ArgumentTypeError("unknown data shape %r; known: %s" % (name, ", ".join(SHAPES)))
    params = Y.parse_params(rest)
    extra = set(params) - set(SHAPES[name])
    if extra:
        raise argparse.ArgumentTypeError("shape %r does not take %s" % (name, sorted(extra)))
    return text


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError("expected a boolean, got %r" % text)


# initial data shapes: name -> default parameters
SHAPES = {
    "gaussian": {"amp": 1.0, "width": 1.0},      # amp exp(-|x|^2 / width)
    "ball": {"amp": 1.0, "radius": 1.0},         # amp on |x| <= radius
    "spike": {"mass": 1.0},                      # mass / h^n at the origin cell
}


def build_shape(spec: str, dim: int, half_width: float, points: int) -> G.GridFunction:
    name, _, rest = spec.partition(":")
    params = dict(SHAPES[name])
    params.update(Y.parse_params(rest))
    if name == "gaussian":
        return G.radial(lambda r: params["amp"] * np.exp(-r ** 2 / params["width"]), dim, half_width, points)
    if name == "ball":
        return G.indicator_ball(params["radius"], dim, half_width, points) * params["amp"]
    u = G.GridFunction(dim, half_width, points, np.zeros((points,) * dim))
    samples = np.zeros(u.samples.shape)
    samples[(points // 2,) * dim] = params["mass"] / u.spacing ** dim
    return u.with_samples(samples)


def resolve_norm(spec: str):
    return "inf" if spec == "inf" else Y.from_spec(spec)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings inf/-inf/nan."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if v != v else ("inf" if v > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dump_config(cfg: dict) -> str:
    """The flat ``key = value`` form of an effective configuration."""
    lines = []
    for key, val in cfg.items():
        if val is None:
            continue
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, list):
            text = ",".join(repr(float(v)) for v in val)
        elif isinstance(val, float):
            text = repr(val)
        else:
            text = str(val)
        lines.append("%s = %s" % (key, text))
    return "\n".join(lines) + "\n"


def read_config(path: str) -> list[tuple[str, str]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError("cannot read config file %s: %s" % (path, exc.strerror))
    return read_config_text(text, path)


def read_config_text(text: str, path: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise UsageError("%s:%d: expected key = value" % (path, lineno))
        pairs.append((key.strip().replace("-", "_"), val.strip()))
    return pairs


class Run:
    """Collects files and verdict-level failures for one subcommand."""

    def __init__(self, out: str, config: dict):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.files: list[str] = []
        self.failures: list[str] = []
        self.result: dict = {}

    def csv(self, name: str, header, rows) -> None:
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def check(self, ok: bool, message: str) -> None:
        if not ok:
            self.failures.append(message)

    def finish(self) -> int:
        (self.out / "config.txt").write_text(dump_config(self.config))
        report = {"config": self.config, "status": "failed" if self.failures else "ok",
                  "failures": self.failures, "files": self.files, "result": self.result}
        (self.out / "report.json").write_text(json.dumps(jsonable(report), indent=2) + "\n")
        for msg in self.failures:
            print("check failed: %s" % msg, file=sys.stderr)
        return 2 if self.failures else 0


def _pool_map(func, items):
    items = list(items)
    workers = min(S.worker_count(), max(len(items), 1))
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _t_grid(a) -> np.ndarray:
    return np.logspace(math.log10(a.t_min), math.log10(a.t_max), a.t_points)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_young_check(a, run: Run) -> None:
    phi = Y.from_spec(a.phi)
    rng = np.random.default_rng(a.seed)
    ys = np.logspace(-6, 6, a.samples)
    inv = Y.generalized_inverse(phi, ys, method="bisection")
    back = Y.values_saturating(phi, inv)
    xs = np.logspace(-3, 0.3, a.samples)
    forward = Y.generalized_inverse(phi, Y.values_saturating(phi, xs), method="bisection")
    inverse_ok = bool(np.all(back <= ys * (1 + 1e-10)) and np.all(forward >= xs * (1 - 1e-10)))

    lo = 10 ** rng.uniform(-4, 4, 1000)
    hi = 10 ** rng.uniform(-4, 4, 1000)
    f_inv = lambda v: Y.generalized_inverse(phi, v, method="bisection")
    mid = f_inv(0.5 * (lo + hi))
    concave_ok = bool(np.all(mid >= 0.5 * (f_inv(lo) + f_inv(hi)) - 1e-9 * mid))
    a_, b_ = np.minimum(lo, hi), np.maximum(lo, hi)
    ratio_ok = bool(np.all(a_ / f_inv(a_) <= b_ / f_inv(b_) * (1 + 1e-9)))

    star_inv = np.full(ys.shape, np.nan)
    complement = "skipped"
    product_ok = None
    try:
        star = Y.young_complement(phi)
        star_inv = Y.generalized_inverse(star, ys, method="bisection")
        prod = inv * star_inv / ys
        product_ok = bool(np.all(prod >= 1 - 1e-2) and np.all(prod <= 2 * (1 + 1e-2)))
        complement = star.label
    except Exception as exc:          # type III functions have no usable complement
        complement = "skipped: %s" % exc

    lam = a.lam
    dilated = Y.dilate(phi, lam)
    dil_inv = Y.generalized_inverse(dilated, ys, method="bisection")
    dilation_inverse_ok = bool(np.allclose(dil_inv, lam * inv, rtol=1e-9))
    u = G.radial(lambda r: np.exp(-r ** 2), 1, 8.0, 256)
    base = G.luxemburg_norm(u, phi)
    dil_norm = G.luxemburg_norm(u, dilated)

    run.csv("inverse.csv", ["y", "inverse", "phi_of_inverse", "complement_inverse", "product_over_y"],
            zip(ys, inv, back, star_inv, inv * star_inv / ys))
    run.result = {
        "label": phi.label, "type": Y.young_type(phi),
        "n_function": bool(Y.classify_n_function(phi)), "delta2": bool(Y.check_delta2(phi)),
        "inverse_sandwich": inverse_ok, "inverse_midpoint_concave": concave_ok,
        "y_over_inverse_nondecreasing": ratio_ok, "complement": complement,
        "inverse_product_in_band": product_ok,
        "dilation": {"lam": lam, "inverse_scales_by_lam": dilation_inverse_ok,
                     "norm": base, "dilated_norm": dil_norm,
                     "dilated_norm_times_lam_over_norm": dil_norm * lam / base},
    }
    run.check(inverse_ok, "Phi(Phi^-1(y)) <= y <= Phi^-1(Phi(y)) violated")
    run.check(concave_ok and ratio_ok, "inverse not concave or y/Phi^-1(y) not monotone")
    run.check(product_ok is not False, "Phi^-1 (Phi*)^-1 / y outside [1, 2]")
    run.check(dilation_inverse_ok, "inverse of the dilate differs from lam Phi^-1")


def cmd_kernel_norm(a, run: Run) -> None:
    theta = Y.from_spec(a.theta)
    ts = _t_grid(a)
    ratio = lambda panels: _pool_map(lambda t: S.kernel_bound_ratio(theta, t, a.n, panels=panels), ts)
    coarse, fine = ratio(a.panels), ratio(2 * a.panels)
    norms = _pool_map(lambda t: S.kernel_orlicz_norm(theta, t, a.n, panels=2 * a.panels), ts)
    drift = abs(max(fine) / max(coarse) - 1)
    run.csv("kernel.csv", ["t", "norm", "ratio", "ratio_half_panels"], zip(ts, norms, fine, coarse))
    result = {"label": theta.label, "fitted_constant": max(fine), "refinement_drift": drift}
    if a.a is not None:
        rows = S.verify_induction_bounds(theta, a.a, j_max=a.j_max)
        run.csv("induction.csv", ["j", "I", "I_ratio", "J_ratio"],
                [(r.j, r.I, r.I_ratio, r.J_ratio) for r in rows])
        worst = max(r.I_ratio for r in rows)
        result["induction_worst_ratio"] = worst
        run.check(worst <= 1 + 1e-6, "induction ratio %.6g exceeds 1" % worst)
    run.result = result
    run.check(all(np.isfinite(fine)) and drift < 0.05,
              "fitted kernel constant drifts by %.3g under refinement" % drift)


def cmd_smoothing_sweep(a, run: Run) -> None:
    phi, psi = resolve_norm(a.phi), resolve_norm(a.psi)
    data = build_shape(a.data, a.n, a.L, a.N)
    ts = _t_grid(a)
    rep = S.smoothing_sweep(phi, psi, data, ts)
    rep.write_csv(run.out / "sweep.csv")
    run.files.append("sweep.csv")
    slope = float(np.polyfit(np.log(ts), np.log(rep.norms), 1)[0])
    run.result = dict(rep.to_dict(), slope=slope)
    run.check(all(np.isfinite(rep.ratios)) and min(rep.ratios) > 0, "non-finite or zero ratio")
    if a.expect_slope is not None:
        run.check(abs(slope - a.expect_slope) <= a.slope_tol,
                  "slope %.4f outside %.4f +- %.4f" % (slope, a.expect_slope, a.slope_tol))


def _verdict_rows(verdicts):
    return [(v.lam, v.kind, v.value, v.stage, v.exponent, v.where) for v in verdicts]


def cmd_wellposed(a, run: Run) -> None:
    nl, phi = NL.from_spec(a.f), Y.from_spec(a.phi)
    if a.global_:
        verdicts = _pool_map(lambda lam: W.check_I_zero_infinity(nl, phi, lam, a.n, density=a.density), a.lam)
    else:
        verdicts = _pool_map(lambda lam: W.check_I_infinity(nl, phi, lam, a.n, form=a.form,
                                                            density=a.density), a.lam)
    run.csv("verdicts.csv", ["lam", "kind", "value", "stage", "exponent", "where"], _verdict_rows(verdicts))
    run.result = {"f": nl.label, "phi": phi.label, "verdicts": [v.to_dict() for v in verdicts]}


def _solve_config(a) -> SV.SolveConfig:
    return SV.SolveConfig(a.T, a.M, a.Q, a.tol, a.max_iters, a.first_node)


def _trajectory_rows(rep: SV.SolveReport):
    sups = rep.sup_norms()
    ratios = rep.decay_ratios or [None] * len(sups)
    return [(t, s, r) for (t, _), s, r in zip(rep.trajectory, sups, ratios)]


def cmd_solve(a, run: Run) -> None:
    nl = NL.from_spec(a.f)
    phi = None if a.phi == "inf" else Y.from_spec(a.phi)
    data = build_shape(a.data, a.n, a.L, a.N)
    cfg = _solve_config(a)
    scale = G.sup_norm(data)
    if a.monotone:
        mono = SV.monotone_iterate(nl, data, cfg, phi)
        rep = mono.upper
        run.result = mono.to_dict()
        run.csv("lower.csv", ["t", "sup_norm", "decay_ratio"], _trajectory_rows(mono.lower))
    else:
        rep = SV.picard_solve(nl, data, cfg, phi)
        run.result = rep.to_dict()
    run.csv("trajectory.csv", ["t", "sup_norm", "decay_ratio"], _trajectory_rows(rep))
    if a.save_grids:
        rep.save(run.out / "grids")
        run.files.append("grids/manifest.json")
    run.check(not rep.blow_up, "overflow at t = %s" % rep.blow_up_time)
    run.check(rep.converged, "Picard iteration did not converge")
    run.check(rep.envelope_violation <= 1e-6 * scale,
              "envelope violated by %.3g" % rep.envelope_violation)


def cmd_global(a, run: Run) -> None:
    nl, phi = NL.from_spec(a.f), Y.from_spec(a.phi)
    shape = build_shape(a.data, a.n, a.L, a.N)
    cfg = _solve_config(a)
    c = a.c
    fitted = None
    if c is None:
        ts = np.logspace(math.log10(a.first_node * a.T), math.log10(a.T), 9)
        fitted = S.smoothing_sweep(phi, "inf", shape, ts)
        c = fitted.fitted_constant
    run.result = {"c": c, "c_source": "given" if fitted is None else "fitted from a smoothing sweep"}
    try:
        budget = W.global_budget(nl, phi, a.n, c)
    except NoBudgetError as exc:
        run.result["budget"] = None
        run.check(False, "no admissible global budget: %s" % exc)
        return
    rep = SV.global_decay_experiment(nl, phi, a.n, budget, shape, cfg, fraction=a.fraction)
    run.csv("decay.csv", ["t", "sup_norm", "decay_ratio"], _trajectory_rows(rep))
    run.result.update(budget=budget.to_dict(), solve=rep.to_dict())
    run.check(rep.decay_check["passed"], "decay check failed: %s" % rep.decay_check)
    run.check(rep.envelope_violation <= 1e-6 * G.sup_norm(shape) * a.fraction * budget.radius
              / G.luxemburg_norm(shape, phi), "envelope violated by %.3g" % rep.envelope_violation)


def cmd_critical(a, run: Run) -> None:
    nl, phi = NL.from_spec(a.f), Y.from_spec(a.phi)
    rep = W.criticality_report(nl, phi, a.n, tuple(a.lam))
    run.result = {"criticality": rep.to_dict()}
    if a.gamma is not None:
        datum = SV.critical_datum(nl, a.gamma, a.R, a.n, a.L, a.N)
        probe = SV.blow_up_probe(nl, datum.grid, None, _solve_config(a), halvings=a.halvings)
        run.result.update(datum=datum.to_dict(), probe=probe.to_dict())
        run.csv("probe.csv", ["T", "converged", "blow_up", "blow_up_time", "iterations", "nodes_kept"],
                [(p["T"], p["converged"], p["blow_up"], p["blow_up_time"], p["iterations"], p["nodes_kept"])
                 for p in probe.attempts])
    run.csv("criticality.csv", ["verdict", "critical_pair", "I_infinity", "rho"],
            [(rep.verdict, rep.critical_pair, rep.I_infinity.kind, rep.rho)])


def cmd_construct_j(a, run: Run) -> None:
    J = NL.construct_rapid_J(a.r, x_max=a.x_max, step=a.step)
    profile = NL.PROFILES[a.r]
    xs = np.linspace(0.0, a.x_max, a.rows)
    d = J.diagnostics
    log_J = J.log_J(xs)
    r = profile.r(xs)
    run.csv("J.csv", ["x", "r", "log_J", "dlog_J", "log_p", "margin"],
            zip(xs, r, log_J, J.dlog_J(xs), np.interp(xs, d["x"], d["log_p"]), log_J - r))
    checks = NL.check_rapid_J(J, at=min(20.0, a.x_max / 2))
    run.result = {"label": J.label, "checks": checks, "table_min_margin": float(np.min(log_J - r))}
    run.check(checks["passed"] and np.min(log_J - r) >= 0, "J construction checks failed: %s" % checks)


# presets ------------------------------------------------------------------

def _threshold_run(run: Run, rows, key: str, threshold: float) -> None:
    run.csv("thresholds.csv", [key, "kind", "exponent", "stage"],
            [(r[key], r["kind"], r.get("exponent"), r.get("stage")) for r in rows])
    expected = ["converges" if r[key] > threshold else "diverges" for r in rows]
    got = [r["kind"] for r in rows]
    run.result = {"threshold": threshold, "rows": rows, "expected": expected}
    run.check(got == expected, "verdicts %s do not split at %g" % (got, threshold))


def preset_fujita_threshold(a, run: Run) -> None:
    qc = W.fujita_threshold(a.p, a.n)
    _threshold_run(run, W.fujita_table(a.p, a.n, offsets=tuple(a.offsets)), "q", qc)


def preset_log_fujita(a, run: Run) -> None:
    # f = |u|^{2/n} u at the Fujita exponent against x log^r(1 + x)
    p = W.critical_exponent(a.n)
    rows = W.log_threshold_table(p, 0.0, a.n, 1.0, a.n / 2, offsets=tuple(a.offsets))
    _threshold_run(run, rows, "r", a.n / 2)


def preset_log_power(a, run: Run) -> None:
    q = W.fujita_threshold(a.p, a.n)
    thr = a.n * (a.m + 1) / 2
    rows = W.log_threshold_table(a.p, a.m, a.n, q, thr, offsets=tuple(a.offsets))
    _threshold_run(run, rows, "r", thr)


def _criticality_preset(run: Run, nl, phi, n, lams, check_switch: bool) -> None:
    verdicts = _pool_map(lambda lam: W.check_I_infinity(nl, phi, lam, n), lams)
    run.csv("verdicts.csv", ["lam", "kind", "value", "stage", "exponent", "where"], _verdict_rows(verdicts))
    growth = NL.check_growth_condition(nl)
    report = W.criticality_report(nl, phi, n)
    run.result = {"f": nl.label, "phi": phi.label, "verdicts": [v.to_dict() for v in verdicts],
                  "growth": growth.to_dict(), "criticality": report.to_dict()}
    if check_switch:
        for v in verdicts:
            if v.lam < 1:
                run.check(v.converges, "local integral at lam = %g: %s" % (v.lam, v.kind))
            elif v.lam > 1:
                run.check(v.diverges, "local integral at lam = %g: %s" % (v.lam, v.kind))
    else:
        run.result["note"] = ("for doubly exponential growth the local integral does not settle inside "
                              "the double range; the verdicts are reported as data only")
        run.check(growth.rho_estimate == math.inf and growth.satisfies_G,
                  "growth index %s, condition (G) %s" % (growth.rho_estimate, growth.satisfies_G))
    run.check(report.critical_pair, "f and Phi are not mutually dominated")
    run.check(report.verdict == "local-wellposed-sufficient", "criticality verdict %s" % report.verdict)


def preset_exp_critical(a, run: Run) -> None:
    _criticality_preset(run, NL.exp_nonlinearity(a.p, a.m), Y.power_exp(a.q, a.p), a.n, a.lam, True)


def preset_expexp_critical(a, run: Run) -> None:
    _criticality_preset(run, NL.expexp_nonlinearity(a.p, a.m), Y.power_expexp(a.q, a.p), a.n, a.lam,
                        False)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file supplying defaults")
    p.add_argument("--out", default="orlicz_out", help="output directory (default: %(default)s)")


def _grid_opts(p, N=512, L=32.0):
    p.add_argument("--n", type=int, choices=(1, 2, 3), default=1, help="space dimension")
    p.add_argument("--L", type=positive_float, default=L, help="grid half width")
    p.add_argument("--N", type=even_int, default=N, help="points per axis")


def _time_opts(p, t_min, t_max, points=9):
    p.add_argument("--t-min", type=positive_float, default=t_min)
    p.add_argument("--t-max", type=positive_float, default=t_max)
    p.add_argument("--t-points", type=positive_int, default=points)


def _solve_opts(p, T=1.0):
    p.add_argument("--T", type=positive_float, default=T, help="final time")
    p.add_argument("--M", type=positive_int, default=32, help="time nodes")
    p.add_argument("--Q", type=positive_int, default=48, help="s-quadrature nodes per step")
    p.add_argument("--tol", type=positive_float, default=1e-10, help="Picard tolerance")
    p.add_argument("--max-iters", type=positive_int, default=60)
    p.add_argument("--first-node", type=positive_float, default=1e-3, help="t_1 / T")


def build_parser() -> _Parser:
    parser = _Parser(prog="orlicz-heat", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("young-check", help="inverse, complement and dilation checks for one family")
    _common(p)
    p.add_argument("--phi", type=young_spec, required=True, help="family spec, e.g. power:q=2")
    p.add_argument("--lam", type=positive_float, default=2.0, help="dilation factor")
    p.add_argument("--samples", type=positive_int, default=61)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(_run=cmd_young_check)

    p = sub.add_parser("kernel-norm", help="Orlicz norm of the heat kernel against its bound")
    _common(p)
    p.add_argument("--theta", type=young_spec, required=True)
    p.add_argument("--n", type=int, choices=(1, 2, 3), default=1)
    _time_opts(p, 1e-3, 10.0)
    p.add_argument("--panels", type=positive_int, default=128, help="coarse quadrature panels")
    p.add_argument("--a", type=positive_float, default=None, help="also tabulate induction integrals at a")
    p.add_argument("--j-max", type=int, choices=range(2, 7), default=6)
    p.set_defaults(_run=cmd_kernel_norm)

    p = sub.add_parser("smoothing-sweep", help="||S(t) phi||_Psi against the smoothing envelope")
    _common(p)
    p.add_argument("--phi", type=norm_spec, required=True)
    p.add_argument("--psi", type=norm_spec, required=True, help="family spec or inf")
    _grid_opts(p, N=1024, L=16.0)
    p.add_argument("--data", type=shape_spec, default="spike", help="gaussian, ball or spike")
    _time_opts(p, 1e-2, 1.0)
    p.add_argument("--expect-slope", type=float, default=None)
    p.add_argument("--slope-tol", type=positive_float, default=0.02)
    p.set_defaults(_run=cmd_smoothing_sweep)

    p = sub.add_parser("wellposed", help="local or global integral condition over a lambda grid")
    _common(p)
    p.add_argument("--f", type=nl_spec, required=True, help="nonlinearity spec, e.g. fujita:p=3")
    p.add_argument("--phi", type=young_spec, required=True)
    p.add_argument("--n", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--lam", type=float_list, default=[0.5, 1.0], help="comma-separated lambdas")
    p.add_argument("--form", choices=("x", "y"), default="x")
    p.add_argument("--density", type=positive_int, default=1)
    p.add_argument("--global", dest="global_", action=argparse.BooleanOptionalAction, default=False,
                   help="integrate over (0, inf) instead of (1, inf)")
    p.set_defaults(_run=cmd_wellposed)

    p = sub.add_parser("solve", help="Picard or monotone iteration for the mild solution")
    _common(p)
    p.add_argument("--f", type=nl_spec, required=True)
    p.add_argument("--data", type=shape_spec, default="gaussian")
    p.add_argument("--phi", type=norm_spec, default="inf", help="norm for the stopping metric")
    _grid_opts(p, N=1024, L=20.0)
    _solve_opts(p)
    p.add_argument("--monotone", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--save-grids", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(_run=cmd_solve)

    p = sub.add_parser("global", help="small-data global solution and decay check")
    _common(p)
    p.add_argument("--f", type=nl_spec, required=True)
    p.add_argument("--phi", type=young_spec, required=True)
    p.add_argument("--data", type=shape_spec, default="gaussian")
    p.add_argument("--c", type=positive_float, default=None, help="smoothing constant (fitted if absent)")
    p.add_argument("--fraction", type=positive_float, default=0.5, help="data norm over the radius")
    _grid_opts(p)
    _solve_opts(p, T=10.0)
    p.set_defaults(_run=cmd_global)

    p = sub.add_parser("critical", help="criticality report, optionally with a blow-up probe")
    _common(p)
    p.add_argument("--f", type=nl_spec, required=True)
    p.add_argument("--phi", type=young_spec, required=True)
    p.add_argument("--lam", type=float_list, default=[1e-2, 1e-1, 1.0])
    p.add_argument("--gamma", type=positive_float, default=None, help="probe the datum F^-1(gamma |x|^2)")
    p.add_argument("--R", type=positive_float, default=1.0)
    p.add_argument("--halvings", type=int, default=6)
    _grid_opts(p, N=1024, L=8.0)
    _solve_opts(p, T=0.1)
    p.set_defaults(_run=cmd_critical)

    p = sub.add_parser("construct-j", help="build a rapidly varying J above exp(r)")
    _common(p)
    p.add_argument("--r", choices=sorted(NL.PROFILES), default="exp")
    p.add_argument("--x-max", type=positive_float, default=40.0)
    p.add_argument("--step", type=positive_float, default=1e-3)
    p.add_argument("--rows", type=positive_int, default=81)
    p.set_defaults(_run=cmd_construct_j)

    p = sub.add_parser("preset", help="one-flag threshold and criticality experiments")
    presets = p.add_subparsers(dest="preset", parser_class=_Parser, metavar="PRESET")
    presets.required = True
    offsets = ",".join(repr(v) for v in W.THRESHOLD_OFFSETS)

    q = presets.add_parser("fujita-threshold", help="f = |u|^{p-1}u against x^q across q = n(p-1)/2")
    _common(q)
    q.add_argument("--p", type=positive_float, default=3.0)
    q.add_argument("--n", type=int, choices=(1, 2, 3), default=2)
    q.add_argument("--offsets", type=float_list, default=float_list(offsets))
    q.set_defaults(_run=preset_fujita_threshold)

    q = presets.add_parser("log-fujita", help="Fujita power against x log^r(1+x) across r = n/2")
    _common(q)
    q.add_argument("--n", type=int, choices=(1, 2, 3), default=2)
    q.add_argument("--offsets", type=float_list, default=float_list(offsets))
    q.set_defaults(_run=preset_log_fujita)

    q = presets.add_parser("log-power", help="u^p log^m(1+u) against x^q log^r(1+x) across r = n(m+1)/2")
    _common(q)
    q.add_argument("--p", type=positive_float, default=3.0)
    q.add_argument("--m", type=positive_float, default=1.0)
    q.add_argument("--n", type=int, choices=(1, 2, 3), default=2)
    q.add_argument("--offsets", type=float_list, default=float_list(offsets))
    q.set_defaults(_run=preset_log_power)

    for name, func, help_text in (
            ("exp-critical", preset_exp_critical, "u^m e^{u^p} against x^q e^{x^p}"),
            ("expexp-critical", preset_expexp_critical, "u^m e^{e^{u^p}} against x^q e^{e^{x^p}}")):
        q = presets.add_parser(name, help=help_text)
        _common(q)
        q.add_argument("--p", type=positive_float, default=2.0 if name == "exp-critical" else 1.0)
        q.add_argument("--m", type=float, default=3.0)
        q.add_argument("--q", type=positive_float, default=2.0, help="power weight of Phi")
        q.add_argument("--n", type=int, choices=(1, 2, 3), default=2)
        q.add_argument("--lam", type=float_list, default=[0.5, 0.9, 1.1])
        q.set_defaults(_run=func)
    return parser


def _leaf(parser: argparse.ArgumentParser, argv: list[str]):
    """The (sub)parser that owns the options of this command line, and the
    subcommand names leading to it."""
    node, path = parser, []
    for token in argv:
        subs = [act for act in node._actions if isinstance(act, argparse._SubParsersAction)]
        if not subs:
            break
        if token in subs[0].choices:
            node = subs[0].choices[token]
            path.append(token)
    return node, path


def _config_path(argv: list[str]) -> Optional[str]:
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file name")
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _apply_config(leaf: argparse.ArgumentParser, path: list[str], pairs) -> None:
    actions = {act.dest: act for act in leaf._actions}
    fixed = dict(zip(("command", "preset"), path))
    defaults = {}
    for key, text in pairs:
        if key in ("command", "preset"):
            if text != fixed.get(key):
                raise UsageError("config says %s = %s but the command line runs %s"
                                 % (key, text, fixed.get(key)))
            continue
        act = actions.get(key)
        if act is None or key in ("config", "help"):
            raise UsageError("unknown config key %r for %s" % (key, leaf.prog))
        if act.type is None and act.nargs == 0:
            value = parse_bool(text)
        elif act.type is not None:
            try:
                value = act.type(text)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError("config key %s: %s" % (key, exc))
        else:
            value = text
        if act.choices is not None and value not in act.choices:
            raise UsageError("config key %s: %r not in %s" % (key, value, list(act.choices)))
        defaults[key] = value
    for act in leaf._actions:
        if act.required and act.dest in defaults:
            act.required = False
    leaf.set_defaults(**defaults)


def effective_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if not k.startswith("_") and k != "config"}


def run(argv: Optional[list[str]] = None) -> int:
    """Parse ``argv``, run the experiment and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config = _config_path(argv)
        if config is not None:
            leaf, path = _leaf(parser, argv)
            if leaf is parser or (path[0] == "preset" and len(path) < 2):
                raise UsageError("--config needs a subcommand")
            _apply_config(leaf, path, read_config(config))
        args = parser.parse_args(argv)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except SystemExit as exc:            # --help
        return 0 if not exc.code else 1
    cfg = effective_config(args)
    try:
        r = Run(args.out, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", W.HypothesisWarning)
            warnings.simplefilter("ignore", S.AccuracyWarning)
            args._run(args, r)
        return r.finish()
    except Exception as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
