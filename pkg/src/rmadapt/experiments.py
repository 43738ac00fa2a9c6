"""Experiment orchestration: the univariate and multivariate tables, ratio
curves, single tuning runs and the Metropolis-within-Gibbs demo.

Every replicate gets its own ``RngStream`` keyed by (seed, experiment cell,
replicate index), and results are collected by index, so output is the same
for any number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .diagnostics import acceptance_rate, replicate_quantiles, running_acceptance, summarize
from .dists import UNIVARIATE_NAMES, TargetFamilySpec, make_target, make_univariate
from .hier import HierModel, HierTargetSpec
from .numerics import RngStream
from .oracle import ratio_curve
from .rm import interpolated_ratio
from .samplers import METHODS, run_multivariate, run_mwg, run_univariate_tuned

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "load_config",
    "run_curves",
    "run_experiment",
    "run_mwg_demo",
    "run_oracle",
    "run_table1",
    "run_table2",
    "run_tune_single",
]

EXPERIMENTS = ("table1", "table2", "curves", "mwg-demo", "tune-single", "oracle")
QUANTILES = (0.05, 0.5, 0.95)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str = "tune-single"
    target: TargetFamilySpec = field(default_factory=TargetFamilySpec)
    targets: Optional[list] = None  # table1: catalog names; curves: list of target specs
    replicates: Optional[int] = None
    iters: Optional[int] = None
    p_star: Optional[float] = None
    m_star: Optional[float] = None
    n0_override: Optional[int] = None
    methods: Optional[list] = None
    conditioning: Optional[list] = None
    dim: Optional[int] = None
    sigma1: Optional[float] = None
    p_grid: Optional[list] = None
    oracle_n: Optional[int] = None
    hier: HierTargetSpec = field(default_factory=HierTargetSpec)
    scheme: str = "block"
    seed: int = 2011
    out: Optional[str] = None
    format: str = "csv"
    workers: int = 1
    deterministic: bool = False
    paper_scale: bool = False
    trace_out: Optional[str] = None

    def resolved(self) -> "ExperimentConfig":
        """Fill experiment-specific defaults and validate."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        c = replace(self)
        d = _DEFAULTS[c.experiment](c)
        for k, v in d.items():
            if getattr(c, k) is None:
                setattr(c, k, v)
        if c.replicates is not None and c.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if c.iters is not None and c.iters < (0 if c.experiment == "tune-single" else 1):
            raise ConfigError("iters must be >= 1")
        if c.dim is not None and c.dim < 1:
            raise ConfigError("dim must be >= 1")
        if c.p_star is not None and not 0 < c.p_star < 1:
            raise ConfigError("p_star must lie in (0, 1)")
        try:
            if c.experiment == "table1":
                for name in c.targets:
                    TargetFamilySpec(component=name).validate()
            elif c.experiment == "curves":
                c.targets = [_as_target_spec(t) for t in c.targets]
                for t in c.targets:
                    t.validate()
            elif c.experiment in ("tune-single", "oracle"):
                c.target.validate()
            elif c.experiment == "mwg-demo":
                c.hier.validate()
                if c.scheme not in ("block", "full"):
                    raise ConfigError("scheme must be 'block' or 'full'")
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        if c.methods is not None and any(m not in METHODS for m in c.methods):
            raise ConfigError(f"methods must be among {METHODS}")
        if c.conditioning is not None and any(x not in ("ill", "better") for x in c.conditioning):
            raise ConfigError("conditioning entries must be 'ill' or 'better'")
        if c.p_grid is not None and any(not 0.05 <= p <= 0.95 for p in c.p_grid):
            raise ConfigError("p_grid must lie within [0.05, 0.95]")
        return c

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out", None)
        d.pop("workers", None)
        d.pop("trace_out", None)
        return d


def _table2_defaults(c):
    m, iters, reps = (50, 100_000, 10) if c.paper_scale else (10, 20_000, 5)
    return dict(dim=m, iters=iters, replicates=reps, p_star=0.234, n0_override=20,
                methods=list(METHODS), conditioning=["better", "ill"], sigma1=1.0)


def _tune_defaults(c):
    return dict(iters=5000, p_star=0.44 if c.target.dim == 1 and c.target.kind != "mvn-random-cov"
                else 0.234, sigma1=1.0)


_DEFAULTS = {
    "table1": lambda c: dict(targets=list(UNIVARIATE_NAMES), replicates=200, iters=2000, p_star=0.44),
    "table2": _table2_defaults,
    "curves": lambda c: dict(targets=[TargetFamilySpec()], p_grid=[round(0.1 * k, 1) for k in range(1, 10)],
                             oracle_n=200_000),
    "oracle": lambda c: dict(p_grid=[0.44], oracle_n=1_000_000),
    "tune-single": _tune_defaults,
    "mwg-demo": lambda c: dict(iters=50_000),
}


def _as_target_spec(t) -> TargetFamilySpec:
    if isinstance(t, TargetFamilySpec):
        return t
    if isinstance(t, str):
        return TargetFamilySpec(kind="univariate-catalog", component=t)
    if isinstance(t, dict):
        try:
            return TargetFamilySpec(**t)
        except TypeError as exc:
            raise ConfigError(f"bad target spec {t!r}: {exc}") from exc
    raise ConfigError(f"bad target spec {t!r}")


def config_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    d = dict(d)
    if "target" in d:
        d["target"] = _as_target_spec(d["target"])
    if "hier" in d:
        try:
            d["hier"] = HierTargetSpec(**d["hier"])
        except TypeError as exc:
            raise ConfigError(f"bad hier spec: {exc}") from exc
    return ExperimentConfig(**d)


def load_config(path) -> dict:
    """Read a JSON config file into a plain dict (flag overrides are applied by the caller)."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    return d


# --- output -------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(rows: list, columns: list, cfg: ExperimentConfig, extra: dict | None = None) -> str:
    meta = {"version": __version__, "config": cfg.to_dict()}
    if not cfg.deterministic:
        meta["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if cfg.format == "json":
        body = {**meta, "columns": columns, "rows": rows}
        if extra:
            body.update(extra)
        return json.dumps(_jsonable(body), indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# rmadapt {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(meta["config"]), sort_keys=True) + "\n")
    if "generated" in meta:
        buf.write(f"# generated: {meta['generated']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _pmap(func, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [func(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, *zip(*tasks)))


# --- univariate table ------------------------------------------------------------

def _table1_chain(name: str, iters: int, p_star: float, seed: int, cell: int, rep: int):
    tr = run_univariate_tuned(make_univariate(name), iters, None, p_star,
                              RngStream(seed, cell).child(rep))
    tail = iters - iters // 2
    return tr.final_sigma, acceptance_rate(tr, (iters - tail, iters))


def run_table1(cfg: ExperimentConfig) -> tuple[list, list]:
    """Replicated tuned chains per catalog target; quantiles of final sigma and late OAP."""
    cfg = cfg.resolved()
    tasks = [(name, cfg.iters, cfg.p_star, cfg.seed, k, r)
             for k, name in enumerate(cfg.targets) for r in range(cfg.replicates)]
    res = _pmap(_table1_chain, tasks, cfg.workers)
    rows = []
    for k, name in enumerate(cfg.targets):
        chunk = np.array(res[k * cfg.replicates:(k + 1) * cfg.replicates])
        sq = replicate_quantiles(chunk[:, 0], QUANTILES)
        oq = replicate_quantiles(chunk[:, 1], QUANTILES)
        rows.append({"target": name, "sigma_q05": sq[0], "sigma_q50": sq[1], "sigma_q95": sq[2],
                     "oap_q05": oq[0], "oap_q50": oq[1], "oap_q95": oq[2],
                     "replicates": cfg.replicates, "iters": cfg.iters})
    cols = ["target", "sigma_q05", "sigma_q50", "sigma_q95", "oap_q05", "oap_q50", "oap_q95",
            "replicates", "iters"]
    return rows, cols


# --- multivariate table ------------------------------------------------------------

TABLE2_COLUMNS = ["target", "method", "replicate", "sigma2_mean", "oap", "mean_x1", "sd_x1",
                  "act_x1", "asd_x1"]
_STATS = TABLE2_COLUMNS[3:]


def _table2_chain(cond, method, m, iters, p_star, m_star, n0, sigma1, tseed, seed, cell, rep):
    target = make_target(TargetFamilySpec(kind="mvn-random-cov", dim=m, conditioning=cond, seed=tseed))
    tr = run_multivariate(target, method, iters, p_star, m_star, RngStream(seed, cell).child(rep),
                          sigma1=sigma1, n0_override=n0)
    s = summarize(tr)
    return {"sigma2_mean": s.sigma2_mean, "oap": s.oap_overall, "mean_x1": s.mean[0],
            "sd_x1": s.sd[0], "act_x1": s.act[0], "asd_x1": s.asd[0]}


def run_table2(cfg: ExperimentConfig) -> tuple[list, list]:
    """Three samplers on the random-covariance normal targets.

    Emits one row per replicate plus ``replicate = mean`` and ``replicate = se``
    rows per (target, method) cell.
    """
    cfg = cfg.resolved()
    m = cfg.dim
    m_star = cfg.m_star if cfg.m_star is not None else m
    cells = [(cond, meth) for cond in cfg.conditioning for meth in cfg.methods]
    tasks = [(cond, meth, m, cfg.iters, cfg.p_star, m_star, cfg.n0_override, cfg.sigma1,
              cfg.target.seed, cfg.seed, k, r)
             for k, (cond, meth) in enumerate(cells) for r in range(cfg.replicates)]
    res = _pmap(_table2_chain, tasks, cfg.workers)
    rows = []
    for k, (cond, meth) in enumerate(cells):
        chunk = res[k * cfg.replicates:(k + 1) * cfg.replicates]
        name = f"mvn-{cond}-{m}"
        for r, stats in enumerate(chunk):
            rows.append({"target": name, "method": meth, "replicate": r, **stats})
        arr = np.array([[s[c] for c in _STATS] for s in chunk])
        mean = arr.mean(axis=0)
        se = arr.std(axis=0, ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else np.full(len(_STATS), np.nan)
        rows.append({"target": name, "method": meth, "replicate": "mean", **dict(zip(_STATS, mean))})
        rows.append({"target": name, "method": meth, "replicate": "se", **dict(zip(_STATS, se))})
    return rows, TABLE2_COLUMNS


# --- curves and oracle ------------------------------------------------------------------

CURVE_COLUMNS = ["target", "m", "m_star", "p_star", "sigma_star", "ratio", "se_ratio", "n"]


def _m_star_of(spec: TargetFamilySpec, override) -> float:
    if override is not None:
        return override
    if spec.kind == "multivariate-t":
        return min(spec.dim, spec.dof)
    return 1 if spec.kind == "univariate-catalog" else spec.dim


def _curve_rows(spec, p_grid, n, seed, cell, m_star_override):
    target = make_target(spec)
    pts = ratio_curve(target, p_grid, None, n, RngStream(seed, cell))
    ms = _m_star_of(spec, m_star_override)
    return [{"target": target.name, "m": target.dim, "m_star": ms, "p_star": p.p_star,
             "sigma_star": p.sigma_star, "ratio": p.ratio, "se_ratio": p.se_ratio, "n": p.n}
            for p in pts]


def run_oracle(cfg: ExperimentConfig) -> tuple[list, list]:
    """Monte Carlo ``(sigma*, c*/sigma*)`` for one target over ``p_grid``."""
    cfg = cfg.resolved()
    return _curve_rows(cfg.target, cfg.p_grid, cfg.oracle_n, cfg.seed, 0, cfg.m_star), CURVE_COLUMNS


def run_curves(cfg: ExperimentConfig) -> tuple[list, list]:
    """Oracle curves for several targets, with the two reference relationships alongside."""
    cfg = cfg.resolved()
    tasks = [(spec, cfg.p_grid, cfg.oracle_n, cfg.seed, k, cfg.m_star)
             for k, spec in enumerate(cfg.targets)]
    rows = [r for chunk in _pmap(_curve_rows, tasks, cfg.workers) for r in chunk]
    for r in rows:
        p = r["p_star"]
        r["ref_univariate"] = 1.0 / (p * (1.0 - p))
        r["ref_interpolated"] = interpolated_ratio(p, r["m_star"])
    return rows, CURVE_COLUMNS + ["ref_univariate", "ref_interpolated"]


# --- single tuning run ------------------------------------------------------------------

def _decimate(n: int, limit: int = 1000) -> np.ndarray:
    if n <= limit:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))


def tune_report(trace, window: int = 500) -> dict:
    n = len(trace)
    idx = _decimate(n)
    run = running_acceptance(trace.accepted, window)
    ridx = _decimate(len(run))
    return {
        "iters": n,
        "final_sigma": float(trace.final_sigma),
        "oap": float(np.mean(trace.accepted)) if n else None,
        "sigma_path": [[int(i), float(trace.sigma_path[i])] for i in idx],
        "oap_window": window,
        # [iteration at window end, acceptance over the previous `window` iterations]
        "oap_trajectory": [[int(j + window - 1), float(run[j])] for j in ridx],
        "restarts": [[int(t), int(d)] for t, d, *_ in trace.restart_events],
    }


def run_tune_single(cfg: ExperimentConfig) -> tuple[dict, Any]:
    """One tuned chain; returns ``(report, trace)``."""
    cfg = cfg.resolved()
    target = make_target(cfg.target)
    rng = RngStream(cfg.seed, 0)
    if target.dim == 1:
        trace = run_univariate_tuned(target, cfg.iters, cfg.sigma1, cfg.p_star, rng,
                                     n0_override=cfg.n0_override)
    else:
        ms = _m_star_of(cfg.target, cfg.m_star)
        trace = run_multivariate(target, "rm-adaptive", cfg.iters, cfg.p_star, ms, rng,
                                 sigma1=cfg.sigma1, n0_override=cfg.n0_override)
    report = tune_report(trace)
    report["target"] = target.name
    return report, trace


# --- Metropolis-within-Gibbs demo -------------------------------------------------------

MWG_COLUMNS = ["block", "update", "dim", "p_star", "oap_second_half", "sigma2_mean_second_half",
               "final_sigma2"]


def run_mwg_demo(cfg: ExperimentConfig) -> tuple[list, list]:
    """Per-block acceptance and ``sigma^2`` summaries for the hierarchical demo."""
    cfg = cfg.resolved()
    model = HierModel(cfg.hier, cfg.target.seed)
    trace = run_mwg(model.target(), model.blocks(cfg.scheme), cfg.iters, RngStream(cfg.seed, 0))
    half = cfg.iters // 2
    tuned = [b for b in model.blocks(cfg.scheme).blocks if b.tuned]
    rows = []
    for k, b in enumerate(tuned):
        rows.append({
            "block": b.name, "update": b.update, "dim": len(b.indices), "p_star": b.p_star,
            "oap_second_half": float(np.mean(trace.block_accepted[half:, k])),
            "sigma2_mean_second_half": float(np.mean(trace.block_sigma[half:, k] ** 2)),
            "final_sigma2": float(trace.meta["final_block_sigma"][k] ** 2),
        })
    return rows, MWG_COLUMNS


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run ``cfg.experiment`` and return the rendered output text."""
    cfg = cfg.resolved()
    if cfg.experiment == "tune-single":
        report, trace = run_tune_single(cfg)
        if cfg.trace_out:
            from .trace_io import write_trace_binary, write_trace_csv
            if str(cfg.trace_out).endswith(".rmt"):
                write_trace_binary(trace, cfg.trace_out)
            else:
                write_trace_csv(trace, cfg.trace_out)
        if cfg.format == "json":
            return render([], [], cfg, extra={"report": report})
        rows = [{"step": i, "sigma": s} for i, s in report["sigma_path"]]
        return render(rows, ["step", "sigma"], cfg)
    runner = {"table1": run_table1, "table2": run_table2, "curves": run_curves,
              "oracle": run_oracle, "mwg-demo": run_mwg_demo}[cfg.experiment]
    rows, cols = runner(cfg)
    return render(rows, cols, cfg)
