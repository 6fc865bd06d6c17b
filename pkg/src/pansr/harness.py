"""Experiment grid runner and aggregate reporting.

Each (equation, n, SNR, trial, method) cell writes one JSON-lines record
file under a content-addressed path, so an interrupted grid resumes by
skipping cells whose file already exists. PAN selections are cached per
dataset so that PAN-only and PAN+SR cells on the same data share one run.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bart import BartConfig
from .datagen import DatasetSpec, friedman_scenario, generate, rows_for, train_test_split
from .expr import evaluate_batch, get_equation, load_equations, remap_variables, simplify, to_text
from .metrics import DEFAULT_TOL, NOISY_TOL, feature_usage, is_solution, r_squared
from .panselect import run_pan
from .symreg import GPConfig, evolve_with_stats

log = logging.getLogger(__name__)

METHODS = ("SR", "PAN+SR", "PAN-only")
FRIEDMAN_PREFIX = "friedman-"


def _snr_key(snr) -> float | None:
    return None if snr is None or math.isinf(float(snr)) else float(snr)


@dataclass(frozen=True)
class ExperimentConfig:
    """A full experiment grid.

    Equation names come from the bundled catalogue, or are
    ``friedman-<scenario>`` (``baseline``, ``noisyX``, ``duplicatedX``,
    ``correlatedX``) with ``friedman_p`` columns. SNR ``None`` means
    noiseless.
    """

    equations: tuple[str, ...]
    n_grid: tuple[int, ...] = (500,)
    snr_grid: tuple[float | None, ...] = (None,)
    s: int = 0
    trials: int = 1
    methods: tuple[str, ...] = ("SR", "PAN+SR")
    K: int = 20
    cluster_algo: str = "ahc"
    bart: BartConfig = field(default_factory=BartConfig)
    gp: GPConfig = field(default_factory=GPConfig)
    friedman_p: int = 100
    output_dir: str = "results"
    n_jobs: int = 1
    pan_jobs: int = 1
    master_seed: int = 0
    cell_time_limit: float = 600.0

    def __post_init__(self):
        for name in ("equations", "n_grid", "snr_grid", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "snr_grid", tuple(_snr_key(v) for v in self.snr_grid))
        if isinstance(self.bart, dict):
            object.__setattr__(self, "bart", BartConfig(**self.bart))
        if isinstance(self.gp, dict):
            object.__setattr__(self, "gp", GPConfig(**self.gp))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (self.equations and self.n_grid and self.snr_grid and self.methods):
            raise ValueError("equation, n, SNR and method grids must be non-empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if any(v is not None and not v > 0 for v in self.snr_grid):
            raise ValueError("SNR values must be positive or None")
        known = load_equations()
        for name in self.equations:
            if name.startswith(FRIEDMAN_PREFIX):
                scenario = name[len(FRIEDMAN_PREFIX):]
                if scenario not in ("baseline", "noisyX", "duplicatedX", "correlatedX"):
                    raise ValueError(f"unknown Friedman scenario in {name!r}")
            elif name not in known:
                raise ValueError(f"unknown equation {name!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bart"] = self.bart.to_dict()
        d["gp"] = self.gp.to_dict()
        for k in ("equations", "n_grid", "snr_grid", "methods"):
            d[k] = list(d[k])
        return d


@dataclass
class ExperimentRecord:
    """One (dataset, method, trial) outcome; ``status`` is ``ok`` or ``failed``."""

    dataset_id: str
    equation: str
    n: int
    snr: float | None
    trial: int
    method: str
    seed: int
    status: str = "ok"
    error: str | None = None
    r2: float | None = None
    complexity: int | None = None
    is_solution: bool | None = None
    solution: dict | None = None
    model: str | None = None
    selected: list | None = None
    sel_tpr: float | None = None
    sel_fpr: float | None = None
    sel_fnr: float | None = None
    model_tpr: float | None = None
    model_fpr: float | None = None
    model_fnr: float | None = None
    pan_time: float | None = None
    sr_time: float | None = None
    train_time: float | None = None
    evaluations: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        return cls(**{f.name: d.get(f.name) for f in fields(cls)})


def _digest(obj, size: int = 16) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.blake2b(blob, digest_size=size).hexdigest()


def dataset_seed(master_seed: int, equation: str, n: int, snr, trial: int) -> int:
    """Seed shared by every method on one dataset."""
    return int(_digest([master_seed, equation, n, _snr_key(snr), trial], 8), 16) % (2 ** 32)


def cells(cfg: ExperimentConfig):
    for eq in cfg.equations:
        for n in cfg.n_grid:
            for snr in cfg.snr_grid:
                for trial in range(cfg.trials):
                    for method in cfg.methods:
                        yield eq, n, snr, trial, method


def _dataset_key(cfg: ExperimentConfig, eq, n, snr, trial) -> dict:
    return {"equation": eq, "n": n, "snr": snr, "trial": trial, "s": cfg.s,
            "friedman_p": cfg.friedman_p if eq.startswith(FRIEDMAN_PREFIX) else None,
            "master_seed": cfg.master_seed}


def _cell_key(cfg: ExperimentConfig, eq, n, snr, trial, method) -> dict:
    key = _dataset_key(cfg, eq, n, snr, trial)
    key["method"] = method
    if method != "SR":
        key.update(K=cfg.K, cluster_algo=cfg.cluster_algo, bart=cfg.bart.to_dict())
    if method != "PAN-only":
        key["gp"] = cfg.gp.to_dict()
    return key


def record_path(cfg: ExperimentConfig, eq, n, snr, trial, method) -> Path:
    h = _digest(_cell_key(cfg, eq, n, snr, trial, method))
    return Path(cfg.output_dir) / "records" / h[:2] / f"{h}.jsonl"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def build_dataset(cfg: ExperimentConfig, eq: str, n: int, snr, seed: int):
    """Generate the full dataset of a cell and the sampling box of its columns."""
    rows = rows_for(n)
    snr_value = math.inf if snr is None else snr
    if eq.startswith(FRIEDMAN_PREFIX):
        scenario = eq[len(FRIEDMAN_PREFIX):]
        d = friedman_scenario(scenario, rows, cfg.friedman_p, snr_value, seed)
        bounds = [(0.0, 1.0)] * d.p
        if scenario == "duplicatedX":
            bounds[5] = (0.0, 2.0)
        return d, get_equation("friedman"), bounds
    spec = DatasetSpec(eq, rows, snr_value, cfg.s, seed)
    d = generate(spec)
    eqs = spec.equation
    bounds = list(eqs.bounds) + [b for b in eqs.bounds for _ in range(cfg.s)]
    return d, eqs, bounds


def _pan_cached(cfg: ExperimentConfig, key: dict, train, seed: int):
    h = _digest([key, cfg.K, cfg.cluster_algo, cfg.bart.to_dict()])
    path = Path(cfg.output_dir) / "pan" / f"{h}.json"
    if path.exists():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError:
            pass
    res = run_pan(train.X, train.y, cfg.K, cfg.bart, cfg.cluster_algo, seed, n_jobs=cfg.pan_jobs)
    out = {"selected": list(res.selected), "elapsed": res.elapsed, "degenerate": res.degenerate,
           "avg_ranks": res.avg_ranks.tolist()}
    _atomic_write(path, json.dumps(out))
    return out


def run_cell(cfg: ExperimentConfig, eq: str, n: int, snr, trial: int, method: str) -> ExperimentRecord:
    """Run one cell. Exceptions propagate; :func:`run_grid` records them."""
    seed = dataset_seed(cfg.master_seed, eq, n, snr, trial)
    d, eqspec, bounds = build_dataset(cfg, eq, n, snr, seed)
    train, test = train_test_split(d, n, seed=seed)
    rec = ExperimentRecord(_digest(_dataset_key(cfg, eq, n, snr, trial), 8), eq, n, snr, trial,
                           method, seed)
    cols = list(range(d.p))
    pan_time = 0.0
    if method in ("PAN+SR", "PAN-only"):
        pan = _pan_cached(cfg, _dataset_key(cfg, eq, n, snr, trial), train, seed)
        cols = pan["selected"]
        pan_time = pan["elapsed"]
        usage = feature_usage(cols, d.S0, d.p)
        rec.selected = cols
        rec.sel_tpr, rec.sel_fpr, rec.sel_fnr = usage.TPR, usage.FPR, usage.FNR
        rec.pan_time = pan_time
        rec.train_time = pan_time
    if method == "PAN-only":
        return rec

    budget_left = max(1.0, cfg.cell_time_limit - pan_time)
    gp_cfg = cfg.gp.replace(seed=seed, time_limit=min(budget_left, cfg.gp.time_limit or math.inf))
    names = [f"x{j + 1}" for j in range(d.p)]
    res = evolve_with_stats(train.X[:, cols], train.y, gp_cfg, names=[names[j] for j in cols])
    model = remap_variables(res.best.expression, cols, names)
    pred = evaluate_batch(model, test.X)
    rec.r2 = r_squared(test.y, pred) if np.all(np.isfinite(pred)) else None
    if rec.r2 is None:
        rec.error = "model undefined on some test rows"
    tol = DEFAULT_TOL if snr is None else NOISY_TOL
    verdict = is_solution(model, eqspec.expression, bounds, tol=tol, seed=seed)
    usage = feature_usage(model, d.S0, d.p)
    rec.model = to_text(simplify(model))
    rec.complexity = res.best.complexity
    rec.is_solution = verdict.is_solution
    rec.solution = verdict.to_dict()
    rec.model_tpr, rec.model_fpr, rec.model_fnr = usage.TPR, usage.FPR, usage.FNR
    rec.sr_time = res.elapsed
    rec.train_time = pan_time + res.elapsed
    rec.evaluations = res.evaluations
    return rec


def _execute(args) -> dict:
    cfg, cell = args
    path = record_path(cfg, *cell)
    try:
        rec = run_cell(cfg, *cell)
    except Exception as exc:  # a failing cell must not take the grid down
        eq, n, snr, trial, method = cell
        rec = ExperimentRecord("", eq, n, snr, trial, method,
                               dataset_seed(cfg.master_seed, eq, n, snr, trial),
                               status="failed", error=f"{type(exc).__name__}: {exc}")
        log.warning("cell %s failed:\n%s", cell, traceback.format_exc())
    _atomic_write(path, json.dumps(rec.to_dict()) + "\n")
    return rec.to_dict()


def load_record(path: Path) -> ExperimentRecord | None:
    try:
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
        return ExperimentRecord.from_dict(json.loads(lines[-1])) if lines else None
    except (OSError, json.JSONDecodeError):
        return None


def run_grid(cfg: ExperimentConfig, retry_failed: bool = False) -> list[ExperimentRecord]:
    """Run every cell not already on disk and return all records in grid order.

    Parameters
    ----------
    retry_failed : bool
        Recompute cells whose stored record has ``status == "failed"``.
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "config.json", json.dumps(cfg.to_dict(), indent=1))
    grid = list(cells(cfg))
    done: dict = {}
    todo = []
    for cell in grid:
        rec = load_record(record_path(cfg, *cell))
        if rec is not None and not (retry_failed and rec.status == "failed"):
            done[cell] = rec
        else:
            todo.append(cell)
    log.info("%d cells, %d already done", len(grid), len(done))
    if cfg.n_jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            for cell, rec in zip(todo, pool.map(_execute, [(cfg, c) for c in todo])):
                done[cell] = ExperimentRecord.from_dict(rec)
    else:
        for cell in todo:
            done[cell] = ExperimentRecord.from_dict(_execute((cfg, cell)))
    return [done[cell] for cell in grid]


REPORT_METRICS = ("r2", "is_solution", "complexity", "sel_tpr", "sel_fpr", "sel_fnr",
                  "model_fpr", "model_fnr", "train_time")


def _summary(values: list[float]) -> dict:
    k = len(values)
    if k == 0:
        return {"mean": None, "ci_half": None, "count": 0, "ci_undefined": True}
    v = np.asarray(values, dtype=float)
    if k == 1:
        return {"mean": float(v[0]), "ci_half": None, "count": 1, "ci_undefined": True}
    half = 1.96 * float(v.std(ddof=0)) / math.sqrt(k)
    return {"mean": float(v.mean()), "ci_half": half, "count": k, "ci_undefined": False}


def report(records) -> list[dict]:
    """Mean and normal-approximation 95% CI per (method, n, SNR).

    The half-width is 1.96 times the population standard deviation over the
    square root of the count; with one value it is undefined and flagged.
    Failed records are counted but excluded from the metrics.
    """
    groups: dict = {}
    for r in records:
        if isinstance(r, dict):
            r = ExperimentRecord.from_dict(r)
        groups.setdefault((r.method, r.n, r.snr), []).append(r)
    rows = []
    order = {m: k for k, m in enumerate(METHODS)}
    for (method, n, snr), recs in sorted(groups.items(),
                                         key=lambda kv: (order.get(kv[0][0], 9), kv[0][1],
                                                         math.inf if kv[0][2] is None else kv[0][2])):
        ok = [r for r in recs if r.status == "ok"]
        row = {"method": method, "n": n, "snr": "inf" if snr is None else snr,
               "records": len(recs), "failed": len(recs) - len(ok)}
        for m in REPORT_METRICS:
            vals = [float(getattr(r, m)) for r in ok if getattr(r, m) is not None]
            s = _summary(vals)
            name = "solution_rate" if m == "is_solution" else m
            row[f"{name}_mean"] = s["mean"]
            row[f"{name}_ci"] = s["ci_half"]
            row[f"{name}_ci_undefined"] = s["ci_undefined"]
        rows.append(row)
    return rows


def write_report(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return path


def read_records(output_dir) -> list[ExperimentRecord]:
    """Every record stored under ``output_dir``, in no particular order."""
    out = []
    for path in sorted((Path(output_dir) / "records").glob("*/*.jsonl")):
        rec = load_record(path)
        if rec is not None:
            out.append(rec)
    return out
