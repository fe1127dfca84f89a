"""Experiment configuration, orchestration and CSV output.

A config file is plain ``key = value`` lines; ``#`` starts a comment and
lists are comma separated::

    scenario = dw_compare
    snr_s_db = -20, -10, 0, 10
    snr_c_db = 0
    trials = 20

Every trial draws its channels from the substream ``seed ^ trial``; the
same draw is reused across the SNR grid so solver curves are paired.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .channels import (
    SystemConfig,
    gen_random_sensing,
    gen_rayleigh_channel,
    make_aligned_sensing,
    make_iid_sensing,
    make_rng,
)
from .dual import AlignedInstance, hmi_search, mgp_solve, oracle_2d
from .separated import alg1_search, p3_solve, sw_eval

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "ResultRow",
    "SummaryRow",
    "SCENARIOS",
    "parse_config",
    "build_spec",
    "run_experiment",
    "write_csv",
    "read_csv",
    "monte_carlo_summary",
    "alpha_grid",
]

SCENARIOS = ("sw_sweep", "sw_iid", "dw_hmi", "dw_mgp", "dw_compare", "oracle2d", "table_alpha")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def alpha_grid(n_points):
    """``n_points`` equally spaced weights on [0, 1] (3 -> 0, 0.5, 1)."""
    n_points = int(n_points)
    if n_points < 2:
        raise ConfigError("an alpha grid needs at least 2 points")
    return np.linspace(0.0, 1.0, n_points)


_SCENARIO_DEFAULTS = {
    "sw_iid": {"snr_s_db": [20.0], "snr_c_db": [0.0, 5.0, 10.0, 15.0, 20.0]},
    "sw_sweep": {"snr_s_db": [0.0, 5.0, 10.0, 15.0, 20.0], "snr_c_db": [20.0]},
    "dw_hmi": {"snr_s_db": [float(x) for x in range(-10, 11, 2)], "snr_c_db": [-5.0, 0.0, 5.0]},
    "dw_mgp": {"snr_s_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0], "snr_c_db": [0.0, 10.0, 20.0]},
    "dw_compare": {"snr_s_db": [float(x) for x in range(-20, 51, 10)], "snr_c_db": [-5.0]},
    "oracle2d": {"snr_s_db": [15.0], "snr_c_db": [0.0]},
    "table_alpha": {"snr_s_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0], "snr_c_db": [0.0, 10.0, 20.0]},
}

_SOLVER_DEFAULTS = {
    "lambda_s": 1.0,
    "n_paths": 10,
    "ps_points": 101,
    "alg1_grid": 20,
    "alg1_eps": None,
    "hmi_points": [3, 11],
    "oracle_grid": 200,
    "mgp_inactive": "zero",
}

_INT_CFG = ("n_tx", "m_s", "m_c", "n_symbols", "seed")


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


_KEYS = {
    "scenario": str,
    "n_tx": int,
    "m_s": int,
    "m_c": int,
    "n_symbols": int,
    "power_budget": float,
    "seed": int,
    "trials": int,
    "snr_s_db": _float_list,
    "snr_c_db": _float_list,
    "output": str,
    "jobs": int,
    "lambda_s": float,
    "n_paths": int,
    "ps_points": int,
    "alg1_grid": int,
    "alg1_eps": _opt_float,
    "hmi_points": _int_list,
    "oracle_grid": int,
    "mgp_inactive": str,
}


@dataclass
class ExperimentSpec:
    scenario: str
    config: SystemConfig
    snr_s_grid: list
    snr_c_grid: list
    trials: int = 20
    solver_params: dict = field(default_factory=dict)
    output_path: str = None
    jobs: int = 1


def parse_config(text, overrides=None):
    """Parse a ``key = value`` document into a validated `ExperimentSpec`.

    `overrides` (already-typed or string values) replace file values, as
    CLI flags do.
    """
    seen = {}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first defined on line {seen[key]})")
        seen[key] = lineno
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    for key, value in (overrides or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if isinstance(value, str):
            try:
                value = _KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
        values[key] = value
    return build_spec(values, lines=seen)


def build_spec(values, lines=None):
    lines = lines or {}

    def where(key):
        return f"line {lines[key]}: " if key in lines else ""

    if "scenario" not in values:
        raise ConfigError("missing required key 'scenario'")
    scenario = values["scenario"].replace("-", "_")
    if scenario not in SCENARIOS:
        raise ConfigError(f"{where('scenario')}unknown scenario {values['scenario']!r}")

    for key in ("n_tx", "m_s", "m_c", "n_symbols", "trials", "jobs", "n_paths", "ps_points",
                "alg1_grid", "oracle_grid"):
        if key in values and values[key] < 1:
            raise ConfigError(f"{where(key)}{key} must be positive")
    if "power_budget" in values and not values["power_budget"] > 0:
        raise ConfigError(f"{where('power_budget')}power_budget must be positive")
    if "seed" in values and not 0 <= values["seed"] < 2**64:
        raise ConfigError(f"{where('seed')}seed must be an unsigned 64-bit integer")

    cfg_kw = {k: values[k] for k in (*_INT_CFG, "power_budget") if k in values}
    config = SystemConfig(**cfg_kw)

    defaults = _SCENARIO_DEFAULTS[scenario]
    snr_s = values.get("snr_s_db", defaults["snr_s_db"])
    snr_c = values.get("snr_c_db", defaults["snr_c_db"])
    if not snr_s or not snr_c:
        raise ConfigError("SNR grids must be non-empty")

    params = dict(_SOLVER_DEFAULTS)
    params.update({k: values[k] for k in _SOLVER_DEFAULTS if k in values})
    if not params["lambda_s"] > 0:
        raise ConfigError(f"{where('lambda_s')}lambda_s must be positive")
    if any(n < 2 for n in params["hmi_points"]) or not params["hmi_points"]:
        raise ConfigError(f"{where('hmi_points')}each hmi_points entry must be >= 2")
    if params["mgp_inactive"] not in ("zero", "exact"):
        raise ConfigError(f"{where('mgp_inactive')}mgp_inactive must be 'zero' or 'exact'")
    if scenario == "oracle2d" and config.n_tx != 2:
        raise ConfigError(f"{where('n_tx')}scenario oracle2d requires n_tx = 2")

    return ExperimentSpec(
        scenario=scenario,
        config=config,
        snr_s_grid=[float(x) for x in snr_s],
        snr_c_grid=[float(x) for x in snr_c],
        trials=int(values.get("trials", 20)),
        solver_params=params,
        output_path=values.get("output"),
        jobs=int(values.get("jobs", 1)),
    )


@dataclass
class ResultRow:
    scenario: str
    seed: int
    trial: int
    snr_s_db: float
    snr_c_db: float
    sweep: float
    solver: str
    d_s: float
    d_c: float
    d_total: float
    d_avg: float
    rate: float
    alpha: float
    iterations: int
    error: str = ""


COLUMNS = [f.name for f in fields(ResultRow)]


@dataclass
class SummaryRow:
    scenario: str
    snr_s_db: float
    snr_c_db: float
    sweep: float
    solver: str
    mean: float
    stderr: float
    count: int


def _draw(spec, trial):
    cfg = spec.config
    rng = make_rng(cfg.seed, trial)
    if spec.scenario == "sw_iid":
        sensing = make_iid_sensing(spec.solver_params["lambda_s"], cfg.n_tx, cfg.m_s)
    else:
        sensing = gen_random_sensing(rng, cfg.n_tx, cfg.m_s, spec.solver_params["n_paths"])
    comm = gen_rayleigh_channel(cfg.m_c, cfg.n_tx, rng)
    return sensing, comm


def _row(spec, trial, snr_s, snr_c, solver, result, sweep=None, alpha=None, iterations=None):
    return ResultRow(
        scenario=spec.scenario,
        seed=spec.config.seed,
        trial=trial,
        snr_s_db=snr_s,
        snr_c_db=snr_c,
        sweep=sweep,
        solver=solver,
        d_s=result.d_s,
        d_c=result.d_c,
        d_total=result.d_total,
        d_avg=result.d_total / spec.config.n_tx,
        rate=result.rate,
        alpha=alpha,
        iterations=iterations,
    )


def _hmi_runs(spec, sensing, comm, cfg):
    for n_pts in spec.solver_params["hmi_points"]:
        d = hmi_search(sensing, comm, cfg, alphas=alpha_grid(n_pts))
        yield f"hmi_L{n_pts}", d


def _run_point(spec, trial, snr_s, snr_c):
    """All rows for one (SNR pair, trial)."""
    sp = spec.solver_params
    cfg = spec.config.with_snr(snr_s, snr_c)
    sensing, comm = _draw(spec, trial)
    rows = []
    emit = lambda *a, **k: rows.append(_row(spec, trial, snr_s, snr_c, *a, **k))  # noqa: E731

    if spec.scenario in ("sw_iid", "sw_sweep"):
        for x in np.linspace(0.0, cfg.power_budget, sp["ps_points"]):
            emit("sw_eval", sw_eval(x, sensing, comm, cfg).result, sweep=float(x))
        best = alg1_search(sensing, comm, cfg, sp["alg1_grid"], sp["alg1_eps"])
        emit("alg1", best.result, sweep=best.p_split[0], iterations=best.result.meta["rounds"])
        if spec.scenario == "sw_iid":
            opt = p3_solve(sensing, comm, cfg)
            emit("p3", opt.result, sweep=opt.p_split[0])
    elif spec.scenario == "dw_hmi":
        for name, d in _hmi_runs(spec, sensing, comm, cfg):
            emit(name, d.result, alpha=d.alpha)
    elif spec.scenario in ("dw_mgp", "table_alpha"):
        aligned = make_aligned_sensing(sensing.eig.values, comm, cfg.m_s)
        for name, d in _hmi_runs(spec, aligned, comm, cfg):
            emit(name, d.result, alpha=d.alpha)
        if spec.scenario == "dw_mgp":
            inst = AlignedInstance.from_models(aligned, comm, cfg)
            d = mgp_solve(inst, inactive=sp["mgp_inactive"])
            emit("mgp", d.result, iterations=d.result.meta["iterations"])
    elif spec.scenario == "dw_compare":
        sw = alg1_search(sensing, comm, cfg, sp["alg1_grid"], sp["alg1_eps"])
        emit("sw", sw.result, sweep=sw.p_split[0], iterations=sw.result.meta["rounds"])
        n_pts = max(sp["hmi_points"])
        dw = hmi_search(sensing, comm, cfg, alphas=alpha_grid(n_pts))
        emit("dw", dw.result, alpha=dw.alpha)
        aligned = make_aligned_sensing(sensing.eig.values, comm, cfg.m_s)
        dwis = hmi_search(aligned, comm, cfg, alphas=alpha_grid(n_pts))
        inst = AlignedInstance.from_models(aligned, comm, cfg)
        mgp = mgp_solve(inst, inactive=sp["mgp_inactive"])
        if mgp.result.d_total < dwis.result.d_total:
            emit("dwis", mgp.result, iterations=mgp.result.meta["iterations"])
        else:
            emit("dwis", dwis.result, alpha=dwis.alpha)
    elif spec.scenario == "oracle2d":
        aligned = make_aligned_sensing(sensing.eig.values, comm, cfg.m_s)
        inst = AlignedInstance.from_models(aligned, comm, cfg)
        o = oracle_2d(inst, sp["oracle_grid"])
        emit("oracle2d", o.result, sweep=float(o.p[0]))
        for name, d in _hmi_runs(spec, aligned, comm, cfg):
            emit(name, d.result, alpha=d.alpha)
        d = mgp_solve(inst, inactive=sp["mgp_inactive"])
        emit("mgp", d.result, sweep=float(d.p[0]), iterations=d.result.meta["iterations"])
    return rows


def _safe_point(args):
    spec, trial, snr_s, snr_c = args
    try:
        return _run_point(spec, trial, snr_s, snr_c)
    except Exception as exc:  # recorded as an error row, never dropped
        return [ResultRow(spec.scenario, spec.config.seed, trial, snr_s, snr_c, None, "error",
                          None, None, None, None, None, None, None, f"{type(exc).__name__}: {exc}")]


def run_experiment(spec):
    """Run every (SNR_s, SNR_c, trial) point; rows come back in grid order."""
    tasks = [
        (spec, trial, s, c)
        for s in spec.snr_s_grid
        for c in spec.snr_c_grid
        for trial in range(spec.trials)
    ]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            chunks = list(pool.map(_safe_point, tasks))
    else:
        chunks = [_safe_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows, path):
    """Write rows with a fixed header; floats keep 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in COLUMNS])
    path = Path(path)
    try:
        path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


_ROW_TYPES = {
    "seed": int, "trial": int, "snr_s_db": float, "snr_c_db": float, "sweep": float,
    "d_s": float, "d_c": float, "d_total": float, "d_avg": float, "rate": float,
    "alpha": float, "iterations": int,
}


def read_csv(path):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for name in COLUMNS:
                v = rec[name]
                conv = _ROW_TYPES.get(name)
                kw[name] = (conv(v) if v != "" else None) if conv else v
            rows.append(ResultRow(**kw))
    return rows


def monte_carlo_summary(rows):
    """Mean and standard error of ``d_total`` per (SNR pair, sweep value, solver).

    Error rows are skipped. A single trial has standard error 0.
    """
    groups = {}
    scenario = None
    for row in rows:
        if row.error:
            continue
        scenario = row.scenario
        key = (row.snr_s_db, row.snr_c_db, row.sweep, row.solver)
        groups.setdefault(key, []).append(row.d_total)
    if not groups:
        raise ValueError("no result rows to summarize")
    out = []
    for (s, c, sweep, solver), vals in groups.items():
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        out.append(SummaryRow(scenario, s, c, sweep, solver, float(v.mean()), se, int(v.size)))
    return out


def write_summary_csv(summary, path):
    names = [f.name for f in fields(SummaryRow)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in summary:
        writer.writerow([_fmt(getattr(row, n)) for n in names])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def with_overrides(spec, **kw):
    return replace(spec, **kw)
