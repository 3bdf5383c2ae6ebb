"""Experiment orchestration: configuration, seeded parallel replication,
phase-diagram sweeps, and calibration summaries.

Seeds: the cell seed for grid point g, replication r is

    seed = splitmix64(base_seed XOR splitmix64((g << 32) XOR r))

with the standard splitmix64 constants, so runs are reproducible across
platforms and worker counts.  Each cell touches only its own instance and
RNG stream; results are sorted at the end, making the output a pure
function of the configuration.
"""

from __future__ import annotations

import csv
import io
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import cycles, lr_expansion, oracle, recovery, saw
from .errors import UsageError
from .model import ModelParams, sample_instance

_MASK64 = (1 << 64) - 1

KNOWN_TASKS = ("cycles", "detect", "recover", "lr", "oracle")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def cell_seed(base_seed: int, grid_index: int, rep: int) -> int:
    return splitmix64((base_seed ^ splitmix64(((grid_index << 32) ^ rep) & _MASK64)) & _MASK64)


@dataclass
class ExperimentConfig:
    params_grid: list[ModelParams]
    replications: int
    tasks: list[str]
    base_seed: int = 0
    knobs: dict = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise UsageError("replications must be >= 1")
        for t in self.tasks:
            if t not in KNOWN_TASKS:
                raise UsageError(f"unknown task {t!r}; known: {KNOWN_TASKS}")


def load_config(path, threads: int | None = None) -> ExperimentConfig:
    """Read a TOML experiment configuration (schema = 1)."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    if doc.get("schema") != 1:
        raise UsageError("config must declare schema = 1")
    grid = doc.get("grid")
    if not grid:
        raise UsageError("config missing [grid] table")
    lams = grid.get("lambda", [0.0])
    mus = grid.get("mu", [0.0])
    if not isinstance(lams, list):
        lams = [lams]
    if not isinstance(mus, list):
        mus = [mus]
    params_grid = [
        ModelParams.from_gamma(
            lam=float(lam),
            mu=float(mu),
            d=float(grid["d"]),
            gamma=float(grid["gamma"]),
            n=int(grid["n"]),
        )
        for lam in lams
        for mu in mus
    ]
    return ExperimentConfig(
        params_grid=params_grid,
        replications=int(doc.get("replications", 1)),
        tasks=list(doc.get("tasks", [])),
        base_seed=int(doc.get("base_seed", 0)),
        knobs=dict(doc.get("knobs", {})),
        threads=threads if threads is not None else int(doc.get("threads", 1)),
    )


def _null_params(params: ModelParams) -> ModelParams:
    return ModelParams(lam=0.0, mu=0.0, d=params.d, gamma=params.gamma,
                       n=params.n, p=params.p)


def _run_cell(config: ExperimentConfig, grid_index: int, rep: int) -> list[dict]:
    params = config.params_grid[grid_index]
    knobs = config.knobs
    seed = cell_seed(config.base_seed, grid_index, rep)
    sample_params = _null_params(params) if knobs.get("null_instances") else params
    base = {
        "grid": grid_index,
        "rep": rep,
        "seed": seed,
        "lambda": params.lam,
        "mu": params.mu,
        "d": params.d,
        "gamma": params.gamma,
        "n": params.n,
        "p": params.p,
    }
    instance = sample_instance(sample_params, seed)
    rows = []
    for task in config.tasks:
        row = dict(base)
        row["task"] = task
        try:
            if task == "cycles":
                indices = knobs.get("indices", [[2, 1]])
                for k, l in indices:
                    rep_stat = cycles.cycle_statistic(
                        instance,
                        cycles.CycleIndex(int(k), int(l)),
                        budget=int(knobs.get("budget", cycles.DEFAULT_BUDGET)),
                    )
                    row[f"raw_{k}_{l}"] = rep_stat.raw
                    row[f"normalized_{k}_{l}"] = rep_stat.normalized
            elif task == "detect":
                res = cycles.detection_test(
                    instance,
                    params,
                    k=int(knobs.get("k", 2)),
                    level=float(knobs.get("level", 0.05)),
                )
                row["statistic"] = res.statistic
                row["l_used"] = res.l_used
                row["reject"] = int(res.reject)
            elif task == "recover":
                wc = saw.WalkConfig(
                    k=int(knobs.get("k", 6)),
                    l=int(knobs.get("l", 3)),
                    method=str(knobs.get("method", saw.WALK)),
                )
                rec = recovery.weak_recovery_pipeline(
                    instance, wc, seed=splitmix64(seed)
                )
                row["overlap_raw"] = rec.overlap_raw
                row["overlap_centered"] = rec.overlap_centered
                row["delta_prime_used"] = rec.delta_prime_used
                row["feasible"] = int(rec.feasible)
            elif task == "lr":
                trunc = lr_expansion.TruncationConfig(int(knobs.get("K", 3)))
                row["logLR"] = lr_expansion.empirical_logLR_from_instance(
                    instance, params, trunc
                )
            elif task == "oracle":
                row["log_L"] = oracle.exact_log_likelihood_ratio(instance, params)
        except Exception as exc:  # error isolation: record, never abort the run
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def run_experiment(config: ExperimentConfig) -> list[dict]:
    cells = [
        (g, r)
        for g in range(len(config.params_grid))
        for r in range(config.replications)
    ]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            chunks = list(pool.map(lambda c: _run_cell(config, *c), cells))
    else:
        chunks = [_run_cell(config, *c) for c in cells]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["grid"], r["rep"], r["task"]))
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    lead = ["grid", "rep", "seed", "task"]
    extra = sorted({k for row in rows for k in row} - set(lead))
    fields = lead + extra
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_format_value(row.get(k)) for k in fields])
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Summaries and sweeps
# ---------------------------------------------------------------------------

def _mean_se(xs):
    xs = np.asarray(xs, dtype=float)
    if len(xs) == 0:
        return float("nan"), float("nan")
    se = float(np.std(xs, ddof=1) / math.sqrt(len(xs))) if len(xs) > 1 else 0.0
    return float(np.mean(xs)), se


def summarize(rows: list[dict], task: str) -> list[dict]:
    """Per-grid-point summary of a single task's rows: means and standard
    errors, KS distance to standard normal for normalized cycle statistics,
    index of dispersion for wedge-free counts, pairwise correlations between
    different cycle statistics, rejection rates, and overlap quantiles."""
    tasks_present = {row["task"] for row in rows}
    if tasks_present - {task}:
        raise UsageError(
            f"summarize expects rows from task {task!r} only, got {tasks_present}"
        )
    groups: dict[int, list[dict]] = {}
    for row in rows:
        groups.setdefault(int(row["grid"]), []).append(row)
    out = []
    for g in sorted(groups):
        rows_g = groups[g]
        summary = {"grid": g, "task": task, "count": len(rows_g)}
        for key in ("lambda", "mu", "d", "gamma", "n", "p"):
            if key in rows_g[0]:
                summary[key] = rows_g[0][key]
        numeric_cols = sorted(
            k
            for k in rows_g[0]
            if k not in ("grid", "rep", "seed", "task", "error")
            and k not in ("lambda", "mu", "d", "gamma", "n", "p")
        )
        cols = {}
        for k in numeric_cols:
            vals = [float(r[k]) for r in rows_g if r.get(k) not in (None, "")]
            cols[k] = np.asarray(vals)
            mean, se = _mean_se(vals)
            summary[f"mean_{k}"] = mean
            summary[f"se_{k}"] = se
        for k, vals in cols.items():
            if k.startswith("normalized_") and len(vals) > 1:
                summary[f"ks_{k}"] = float(stats.kstest(vals, "norm").statistic)
            if k.startswith("raw_") and k.endswith("_0") and len(vals) > 1:
                mean = np.mean(vals)
                if mean > 0:
                    summary[f"dispersion_{k}"] = float(np.var(vals, ddof=1) / mean)
        raw_keys = [k for k in cols if k.startswith(("raw_", "normalized_"))]
        for i, ka in enumerate(raw_keys):
            for kb in raw_keys[i + 1 :]:
                if ka.split("_", 1)[0] != kb.split("_", 1)[0]:
                    continue
                va, vb = cols[ka], cols[kb]
                if len(va) > 1 and np.std(va) > 0 and np.std(vb) > 0:
                    summary[f"corr_{ka}_{kb}"] = float(np.corrcoef(va, vb)[0, 1])
        if "reject" in cols:
            summary["rejection_rate"] = float(np.mean(cols["reject"]))
        if "overlap_raw" in cols and len(cols["overlap_raw"]):
            qs = np.quantile(cols["overlap_raw"], [0.1, 0.5, 0.9])
            summary["overlap_q10"], summary["overlap_q50"], summary["overlap_q90"] = (
                float(qs[0]),
                float(qs[1]),
                float(qs[2]),
            )
        out.append(summary)
    return out


def sweep_phase_diagram(
    lambda_grid,
    mu_grid,
    fixed: dict,
    reps: int,
    task: str,
    base_seed: int = 0,
    knobs: dict | None = None,
    threads: int = 1,
) -> list[dict]:
    """Mean power or mean overlap per (lambda, mu) point, with MC standard
    error and the analytic boundary indicator 1{lambda^2 + mu^2/gamma > 1}."""
    grid = [
        ModelParams.from_gamma(
            lam=float(lam),
            mu=float(mu),
            d=float(fixed["d"]),
            gamma=float(fixed["gamma"]),
            n=int(fixed["n"]),
        )
        for lam in lambda_grid
        for mu in mu_grid
    ]
    config = ExperimentConfig(
        params_grid=grid,
        replications=reps,
        tasks=[task],
        base_seed=base_seed,
        knobs=knobs or {},
        threads=threads,
    )
    rows = run_experiment(config)
    summaries = summarize(rows, task)
    metric = "rejection_rate" if task == "detect" else "mean_overlap_raw"
    out = []
    for s in summaries:
        params = grid[s["grid"]]
        out.append(
            {
                "lambda": params.lam,
                "mu": params.mu,
                "d": params.d,
                "gamma": params.gamma,
                "n": params.n,
                metric: s.get(metric),
                "se": s.get("se_overlap_raw", s.get("se_reject")),
                "above_boundary": int(params.signal > 1),
            }
        )
    return out
