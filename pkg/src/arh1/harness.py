"""Monte Carlo convergence studies for the ARH(1) estimators.

A study sweeps a grid of sample sizes, simulates ``replications`` independent
trajectories per size, and records error metrics and bound checks per cell.
Replications are aggregated by their median; medians are fitted on a log-log
scale and the asymptotic claims are evaluated as pass/fail checks.

Cell ``(n, r)`` draws from the random stream ``(master_seed, n, r)``, so the
report does not depend on the order or concurrency of evaluation.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from arh1 import estimators as est
from arh1 import hilbert as hc
from arh1 import predictor
from arh1.model import ARHModel, StationaryLaw, make_model, simulate, stationary_law

log = logging.getLogger(__name__)

METRIC_GROUPS = {
    "cov_hs": ("cov_hs",),
    "cross_hs": ("cross_hs",),
    "rho_trace": ("rho_trace", "rho_trace_proj", "proj_trace", "proj_residual_op"),
    "rho_hs": ("rho_hs",),
    "rho_op": ("rho_op",),
    "svd_rho_op": ("svd_rho_op", "comp_op"),
    "eigvec_align": ("eigvec_align",),
    "svdvec_align": ("svdvec_align_right", "svdvec_align_left"),
    "singval_sup": ("singval_sup",),
    "pred_gap": ("pred_gap", "pred_mse"),
    "bounds": ("bound_eigvec", "bound_svdvec_right", "bound_svdvec_left", "bound_singval",
               "bound_triangle", "singval_sum"),
}
BOUND_METRICS = METRIC_GROUPS["bounds"]

CHECK_REQUIRES = {
    "cov_rate": ("cov_hs", "cross_hs"),
    "cov_normalized_rate": ("cov_hs", "cross_hs"),
    "componentwise_trace": ("rho_trace",),
    "diagonal_operator": ("svd_rho_op",),
    "singular_value_bound": ("bounds",),
    "eigenvector_bound": ("bounds",),
    "singular_vector_bound": ("bounds",),
    "trace_triangle": ("bounds",),
    "predictor": ("pred_gap",),
}


@dataclass(frozen=True)
class StudyConfig:
    rho: str = "power:0.8,2"
    c_eps: str = "power:1,2"
    law: str = "gaussian"
    bound: float | None = None
    d: int = 10
    n_grid: tuple[int, ...] = (100, 400, 1600, 6400)
    replications: int = 50
    master_seed: int = 20170601
    burn_in: int = 0
    truncation: str = "fixed:3"
    beta: float = 1.0
    metrics: tuple[str, ...] = tuple(METRIC_GROUPS)
    checks: tuple[str, ...] = tuple(CHECK_REQUIRES)
    slope_min: float = -0.65
    slope_max: float = -0.35
    reduction: float = 0.5
    mse_tolerance: float = 0.15

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "checks", tuple(self.checks))
        if not grid or any(n < 2 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing with every n >= 2")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.beta <= 0.5:
            raise ValueError("beta must exceed 1/2")
        unknown = set(self.metrics) - set(METRIC_GROUPS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        for check in self.checks:
            if check not in CHECK_REQUIRES:
                raise ValueError(f"unknown acceptance check {check!r}")
            missing = set(CHECK_REQUIRES[check]) - set(self.metrics)
            if missing:
                raise ValueError(f"check {check!r} needs metrics {sorted(missing)}")
        est.parse_rule(self.truncation)

    def build_model(self) -> ARHModel:
        return make_model(self.rho, self.d, self.c_eps, self.law, self.bound)


# ---------------------------------------------------------------------------
# config files

_SECTIONS = {
    "model": ("rho", "c_eps", "law", "bound", "d"),
    "sampling": ("n_grid", "replications", "master_seed", "burn_in"),
    "estimation": ("truncation", "beta", "metrics"),
    "acceptance": ("checks", "slope_min", "slope_max", "reduction", "mse_tolerance"),
}
_INT = {"d", "replications", "master_seed", "burn_in"}
_FLOAT = {"beta", "slope_min", "slope_max", "reduction", "mse_tolerance"}
_LIST = {"metrics", "checks"}


def coerce(key: str, value):
    """Convert a textual config value to the type of ``StudyConfig.<key>``."""
    if not isinstance(value, str):
        return value
    value = value.strip()
    if key in _INT:
        return int(value)
    if key in _FLOAT:
        return float(value)
    if key == "bound":
        return None if value.lower() in ("", "none", "default") else float(value)
    if key == "n_grid":
        return tuple(int(v) for v in value.replace(" ", "").split(",") if v)
    if key in _LIST:
        if value.lower() == "all":
            return tuple(METRIC_GROUPS) if key == "metrics" else tuple(CHECK_REQUIRES)
        if value.lower() == "none":
            return ()
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return value


def load_config(path=None, overrides: dict | None = None) -> StudyConfig:
    """Read an INI-style study file; ``overrides`` (already keyed by field) win."""
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_file(fh)
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SECTIONS[section]:
                    raise ValueError(f"unknown key {key!r} in [{section}]")
                values[key] = coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = coerce(key, raw)
    return StudyConfig(**values)


def config_to_ini(config: StudyConfig) -> str:
    parser = configparser.ConfigParser()
    for section, keys in _SECTIONS.items():
        parser[section] = {}
        for key in keys:
            v = getattr(config, key)
            if isinstance(v, tuple):
                v = ", ".join(map(str, v))
            parser[section][key] = "none" if v is None else str(v)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(ns, medians) -> dict:
    """Least-squares line through ``(ln n, ln median)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.asarray(medians, dtype=float)
    if x.size < 3:
        raise ValueError("rate fit needs at least 3 grid points")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("rate fit needs positive finite medians")
    y = np.log(y)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    return {"slope": slope, "intercept": intercept, "r2": r2}


def normalized_rate_check(ns, medians, beta: float = 1.0) -> dict:
    """Values ``n^{1/4} / (ln n)^beta * err``; passes when the last is below the first."""
    if beta <= 0.5:
        raise ValueError("beta must exceed 1/2")
    ns = np.asarray(ns, dtype=float)
    err = np.asarray(medians, dtype=float)
    if np.any(ns <= 1):
        raise ValueError("normalization needs n > 1")
    if np.any(~np.isfinite(err)) or np.any(err <= 0):
        raise ValueError("normalization needs positive finite errors")
    vals = ns**0.25 / np.log(ns) ** beta * err
    return {"values": [float(v) for v in vals], "passed": bool(vals[-1] < vals[0])}


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Cell:
    metric: str
    n: int
    rep: int
    value: float
    status: str


@dataclass(frozen=True)
class _Context:
    config: StudyConfig
    model: ARHModel
    law: StationaryLaw
    rule: est.TruncationRule
    metrics: tuple[str, ...]
    true_svd: hc.SvdSystem


def _context(config: StudyConfig) -> _Context:
    model = config.build_model()
    law = stationary_law(model)
    rule = est.parse_rule(config.truncation)
    names = tuple(m for g in config.metrics for m in METRIC_GROUPS[g])
    true_svd = hc.svd(model.rho)
    return _Context(config, model, law, rule, names, true_svd)


def _ratio(rep: est.BoundReport) -> float:
    if rep.rhs > 0:
        return rep.lhs / rep.rhs
    return 0.0 if rep.lhs == 0 else math.inf


def _bound_values(ctx: _Context, emp, plan, rho_tilde, out: dict) -> None:
    k = plan.k
    try:
        r = est.check_eigenvector_bound(emp, ctx.law, plan)
        out["bound_eigvec"] = (_ratio(r), "holds" if r.holds else "violated")
    except est.DegenerateSpectrumError:
        out["bound_eigvec"] = (math.nan, "skipped")
    try:
        s = est.check_bound_svd_perturbation(emp, ctx.law, plan)
        out["bound_svdvec_right"] = (_ratio(s.right), "holds" if s.right.holds else "violated")
        out["bound_svdvec_left"] = (_ratio(s.left), "holds" if s.left.holds else "violated")
        out["singval_sum"] = (s.singular_sum, "holds" if s.singular_sum_ok else "violated")
    except est.DegenerateSpectrumError:
        for m in ("bound_svdvec_right", "bound_svdvec_left", "singval_sum"):
            out[m] = (math.nan, "skipped")
    # the singular-value bound needs no gap condition
    T = est.composition(emp, k)
    P = est.population_composition(ctx.law, k)
    sv = est.BoundReport.of(
        float(np.max(np.abs(hc.singular_values(T) - hc.singular_values(P)))),
        hc.operator_norm(T - P))
    out["bound_singval"] = (_ratio(sv), "holds" if sv.holds else "violated")

    rho = ctx.model.rho
    Pi = est.projector(emp.eigen_c, k)
    lhs = hc.trace_norm(rho_tilde - Pi @ rho @ Pi)
    rhs = hc.trace_norm(rho_tilde - rho) + hc.trace_norm(rho - Pi @ rho @ Pi)
    ok = lhs <= rhs + 1e-10
    out["bound_triangle"] = (lhs / rhs if rhs > 0 else 0.0, "holds" if ok else "violated")


def compute_cell(ctx: _Context, n: int, rep: int) -> list[Cell]:
    cfg = ctx.config
    traj = simulate(ctx.model, n, burn_in=cfg.burn_in, seed=cfg.master_seed, stream=(n, rep))
    rho = ctx.model.rho
    out: dict = {}
    try:
        emp = est.empirical_operators(traj)
        out["cov_hs"] = (hc.hs_norm(emp.c_n - ctx.law.c_x), "ok")
        out["cross_hs"] = (hc.hs_norm(emp.d_n - ctx.law.d_x), "ok")
        plan = est.select_truncation(emp, ctx.rule)
        k = plan.k
        tilde = est.componentwise_estimator(emp, plan).operator
        hat = est.diagonal_svd_estimator(emp, plan)
        Pi = est.projector(emp.eigen_c, k)
        out["rho_trace"] = (hc.trace_norm(tilde - rho), "ok")
        out["rho_trace_proj"] = (hc.trace_norm(tilde - Pi @ rho @ Pi), "ok")
        out["proj_trace"] = (hc.trace_norm(Pi @ rho @ Pi - rho), "ok")
        out["proj_residual_op"] = (hc.operator_norm(rho - Pi @ rho), "ok")
        out["rho_hs"] = (hc.hs_norm(tilde - rho), "ok")
        out["rho_op"] = (hc.operator_norm(tilde - rho), "ok")
        out["svd_rho_op"] = (hc.operator_norm(hat.operator - rho), "ok")
        out["comp_op"] = (hc.operator_norm(est.composition(emp, k) - rho), "ok")
        out["eigvec_align"] = (est.eigvec_alignment_error(
            emp.eigen_c.vectors, ctx.law.eigen.vectors, k), "ok")
        out["svdvec_align_right"] = (est.eigvec_alignment_error(
            hat.right, ctx.true_svd.right, k), "ok")
        out["svdvec_align_left"] = (est.eigvec_alignment_error(
            hat.left, ctx.true_svd.left, k), "ok")
        out["singval_sup"] = (float(np.max(np.abs(
            hat.singular_values - ctx.true_svd.values[:k]))), "ok")
        out["pred_gap"] = (predictor.oracle_gap(tilde, rho, traj.samples[-1]), "ok")
        out["pred_mse"] = (predictor.rolling_forecast_error(traj, tilde).mean_sq_err, "ok")
        if "bound_singval" in ctx.metrics:
            _bound_values(ctx, emp, plan, tilde, out)
    except est.AssumptionError as exc:
        log.debug("cell n=%d rep=%d failed: %s", n, rep, exc)
        return [Cell(m, n, rep, math.nan, "failed") for m in ctx.metrics if m not in out] + [
            Cell(m, n, rep, *out[m]) for m in ctx.metrics if m in out]
    return [Cell(m, n, rep, float(out[m][0]), out[m][1]) for m in ctx.metrics]


# ---------------------------------------------------------------------------
# report


@dataclass
class ConvergenceReport:
    config: StudyConfig
    cells: list[Cell]
    aggregates: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    bound_rates: dict = field(default_factory=dict)
    claims: dict = field(default_factory=dict)
    trace_c_eps: float = math.nan

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.claims.values())

    def medians(self, metric: str) -> list[float]:
        return [self.aggregates[metric][str(n)]["median"] for n in self.config.n_grid]

    def cells_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "n", "rep", "value", "status"])
        for c in self.cells:
            w.writerow([c.metric, c.n, c.rep, format(c.value, ".17g"), c.status])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "config": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in asdict(self.config).items()},
            "trace_c_eps": self.trace_c_eps,
            "aggregates": self.aggregates,
            "fits": self.fits,
            "bound_pass_rates": self.bound_rates,
            "claims": self.claims,
            "passed": self.passed,
        }

    def summary_json(self) -> str:
        return json.dumps(_clean(self.summary()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cells, summary = out / "cells.csv", out / "summary.json"
        cells.write_text(self.cells_csv())
        summary.write_text(self.summary_json())
        return cells, summary


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _aggregate(config: StudyConfig, cells: list[Cell]) -> dict:
    by_key: dict = {}
    for c in cells:
        by_key.setdefault((c.metric, c.n), []).append(c)
    agg: dict = {}
    for (metric, n), group in sorted(by_key.items()):
        vals = np.array([c.value for c in group if c.status in ("ok", "holds", "violated")])
        entry = {"count": len(vals), "failed": sum(c.status == "failed" for c in group),
                 "skipped": sum(c.status == "skipped" for c in group)}
        if vals.size:
            q = np.quantile(vals, [0.1, 0.25, 0.5, 0.75, 0.9])
            entry.update(q10=float(q[0]), q25=float(q[1]), median=float(q[2]),
                         q75=float(q[3]), q90=float(q[4]))
        else:
            entry["median"] = math.nan
        agg.setdefault(metric, {})[str(n)] = entry
    return agg


def _claims(report: ConvergenceReport) -> dict:
    cfg = report.config
    ns = cfg.n_grid
    claims: dict = {}

    def med(metric):
        return report.medians(metric)

    def shrinks(metric):
        m = med(metric)
        ok = strictly_decreasing(m) and m[-1] < cfg.reduction * m[0]
        return {"passed": bool(ok), "medians": m}

    def all_hold(*metrics):
        rates = [report.bound_rates[m] for m in metrics]
        ok = all(r["qualifying"] > 0 and r["holds"] == r["qualifying"] for r in rates)
        return {"passed": bool(ok), "rates": {m: report.bound_rates[m] for m in metrics}}

    for check in cfg.checks:
        if check == "cov_rate":
            slopes = {m: (report.fits.get(m) or {}).get("slope") for m in ("cov_hs", "cross_hs")}
            ok = all(s is not None and cfg.slope_min <= s <= cfg.slope_max for s in slopes.values())
            claims[check] = {"passed": ok, "slopes": slopes,
                             "window": [cfg.slope_min, cfg.slope_max]}
        elif check == "cov_normalized_rate":
            res = {}
            for m in ("cov_hs", "cross_hs"):
                try:
                    res[m] = normalized_rate_check(ns, med(m), cfg.beta)
                except ValueError as exc:
                    res[m] = {"passed": False, "error": str(exc)}
            claims[check] = {"passed": all(r["passed"] for r in res.values()), "beta": cfg.beta,
                             "sequences": res}
        elif check == "componentwise_trace":
            claims[check] = shrinks("rho_trace")
        elif check == "diagonal_operator":
            claims[check] = shrinks("svd_rho_op")
        elif check == "singular_value_bound":
            claims[check] = all_hold("bound_singval")
        elif check == "eigenvector_bound":
            claims[check] = all_hold("bound_eigvec")
        elif check == "singular_vector_bound":
            claims[check] = all_hold("bound_svdvec_right", "bound_svdvec_left")
        elif check == "trace_triangle":
            claims[check] = all_hold("bound_triangle")
        elif check == "predictor":
            gap = med("pred_gap")
            mse = med("pred_mse")[-1]
            rel = abs(mse / report.trace_c_eps - 1.0) if report.trace_c_eps > 0 else math.inf
            ok = strictly_decreasing(gap) and rel <= cfg.mse_tolerance
            claims[check] = {"passed": bool(ok), "pred_gap_medians": gap, "final_mse": mse,
                             "trace_c_eps": report.trace_c_eps, "relative_excess": rel}
    return claims


def run_study(config: StudyConfig, threads: int = 1) -> ConvergenceReport:
    ctx = _context(config)
    tasks = [(n, r) for n in config.n_grid for r in range(config.replications)]
    log.info("study: %d cells, %d metrics, %d thread(s)", len(tasks), len(ctx.metrics), threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: compute_cell(ctx, *t), tasks))
    else:
        results = [compute_cell(ctx, n, r) for n, r in tasks]
    cells = sorted((c for group in results for c in group),
                   key=lambda c: (c.metric, c.n, c.rep))

    report = ConvergenceReport(config=config, cells=cells,
                               trace_c_eps=float(np.trace(ctx.model.c_eps)))
    report.aggregates = _aggregate(config, cells)
    for metric in ctx.metrics:
        if metric in BOUND_METRICS:
            statuses = [c.status for c in cells if c.metric == metric]
            holds = statuses.count("holds")
            qual = holds + statuses.count("violated")
            report.bound_rates[metric] = {
                "holds": holds, "qualifying": qual,
                "skipped": statuses.count("skipped"), "failed": statuses.count("failed"),
                "rate": holds / qual if qual else math.nan}
            continue
        try:
            report.fits[metric] = fit_rate(config.n_grid, report.medians(metric))
        except ValueError as exc:
            report.fits[metric] = {"slope": None, "error": str(exc)}
    report.claims = _claims(report)
    return report


def with_overrides(config: StudyConfig, **changes) -> StudyConfig:
    return replace(config, **{k: coerce(k, v) for k, v in changes.items() if v is not None})
