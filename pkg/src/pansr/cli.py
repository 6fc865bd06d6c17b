"""Command line entry point: ``pansr generate|select|fit|evaluate|run|report``.

Every subcommand accepts ``--config`` pointing at a TOML or JSON file. Its
``bart``, ``gp`` and ``pan`` tables configure the corresponding stages; the
top level holds the experiment grid for ``run``. ``PANSR_SEED`` and
``PANSR_JOBS`` override the master seed and the worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bart import BartConfig
from .datagen import DatasetSpec, friedman_scenario, generate, read_dataset, write_dataset
from .expr import evaluate_batch, parse_expression, simplify, to_text
from .harness import ExperimentConfig, read_records, report, run_grid, write_report
from .metrics import DEFAULT_TOL, feature_usage, is_solution, r_squared
from .panselect import run_pan
from .symreg import GPConfig, evolve_with_stats

log = logging.getLogger("pansr")


def load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(path.read_text())


def _env_int(name: str, default):
    value = os.environ.get(name)
    return int(value) if value not in (None, "") else default


def _snr(text: str) -> float:
    return math.inf if text.lower() in ("inf", "none") else float(text)


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_generate(args, conf) -> int:
    g = conf.get("generate", {})
    equations = args.equation or g.get("equations", ["friedman"])
    ns = args.n or g.get("n_grid", [1000])
    snrs = args.snr or [math.inf if v is None else v for v in g.get("snr_grid", [None])]
    ss = args.s or g.get("s_grid", [g.get("s", 0)])
    trials = args.trials or g.get("trials", 1)
    seed = _env_int("PANSR_SEED", args.seed if args.seed is not None else g.get("seed", 0))
    out = Path(args.out)
    for eq in equations:
        for n in ns:
            for snr in snrs:
                for s in ss:
                    for t in range(trials):
                        ds_seed = seed + t
                        if eq.startswith("friedman-"):
                            p = args.p or g.get("friedman_p", 100)
                            d = friedman_scenario(eq[len("friedman-"):], n, p, snr, ds_seed)
                        else:
                            d = generate(DatasetSpec(eq, n, snr, s, ds_seed))
                        tag = "inf" if math.isinf(snr) else f"{snr:g}"
                        path = write_dataset(d, out / f"{eq}_n{n}_snr{tag}_s{s}_t{t}.csv")
                        print(path)
    return 0


def _bart_cfg(conf) -> BartConfig:
    return BartConfig(**conf.get("bart", {}))


def _gp_cfg(conf, seed) -> GPConfig:
    gp = dict(conf.get("gp", {}))
    if seed is not None:
        gp["seed"] = seed
    return GPConfig(**gp)


def cmd_select(args, conf) -> int:
    d = read_dataset(args.dataset)
    pan = conf.get("pan", {})
    seed = _env_int("PANSR_SEED", args.seed if args.seed is not None else pan.get("seed", 0))
    jobs = _env_int("PANSR_JOBS", args.jobs or pan.get("n_jobs", 1))
    res = run_pan(d.X, d.y, K=args.K or pan.get("K", 20), bart_cfg=_bart_cfg(conf),
                  cluster_algo=args.algo or pan.get("cluster_algo", "ahc"), seed=seed, n_jobs=jobs)
    out = res.to_dict()
    if d.S0:
        out["usage"] = feature_usage(res.selected, d.S0, d.p).to_dict()
    _emit(out, args.out)
    if args.reduced:
        write_dataset(d.columns(res.selected), args.reduced)
    return 0


def cmd_fit(args, conf) -> int:
    d = read_dataset(args.dataset)
    seed = _env_int("PANSR_SEED", args.seed)
    res = evolve_with_stats(d.X, d.y, _gp_cfg(conf, seed))
    model = to_text(simplify(res.best.expression))
    print(model)
    if args.out:
        _emit({"model": model, **res.to_dict()}, args.out)
    return 0


def cmd_evaluate(args, conf) -> int:
    d = read_dataset(args.dataset)
    names = [f"x{j + 1}" for j in range(d.p)]
    model = parse_expression(args.model, names)
    pred = evaluate_batch(model, d.X)
    row = {"model": to_text(simplify(model)),
           "r2": r_squared(d.y, pred) if np.all(np.isfinite(pred)) else None}
    meta = d.meta
    if "expression" in meta:
        truth = parse_expression(meta["expression"], meta["variables"])
        bounds = [tuple(b) for b in meta["bounds"]]
        s = meta.get("s") or 0
        bounds = bounds + [b for b in bounds for _ in range(s)]
        bounds += [(float(d.X[:, j].min()), float(d.X[:, j].max())) for j in range(len(bounds), d.p)]
        row["solution"] = is_solution(model, truth, bounds, tol=args.tol).to_dict()
    if d.S0:
        row["usage"] = feature_usage(model, d.S0, d.p).to_dict()
    _emit(row, args.out)
    return 0


def cmd_run(args, conf) -> int:
    conf = dict(conf)
    for key in ("generate", "pan"):
        conf.pop(key, None)
    if args.output_dir:
        conf["output_dir"] = args.output_dir
    conf["master_seed"] = _env_int("PANSR_SEED", conf.get("master_seed", 0))
    conf["n_jobs"] = _env_int("PANSR_JOBS", conf.get("n_jobs", 1))
    cfg = ExperimentConfig.from_dict(conf)
    recs = run_grid(cfg, retry_failed=args.retry_failed)
    path = write_report(report(recs), Path(cfg.output_dir) / "aggregate.csv")
    failed = sum(r.status == "failed" for r in recs)
    print(f"{len(recs)} records ({failed} failed); aggregate table at {path}")
    return 0


def cmd_report(args, conf) -> int:
    recs = read_records(args.results)
    if not recs:
        print(f"no records under {args.results}", file=sys.stderr)
        return 1
    path = write_report(report(recs), args.out or Path(args.results) / "aggregate.csv")
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pansr", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="TOML or JSON configuration file")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic datasets as CSV + JSON sidecar")
    g.add_argument("--equation", action="append", help="catalogue name or friedman-<scenario>")
    g.add_argument("--n", action="append", type=int)
    g.add_argument("--snr", action="append", type=_snr, help="number or 'inf'")
    g.add_argument("--s", action="append", type=int, help="irrelevant copies per feature")
    g.add_argument("--p", type=int, help="column count for friedman-<scenario>")
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="datasets")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("select", help="screen features with PAN")
    s.add_argument("dataset")
    s.add_argument("--K", type=int)
    s.add_argument("--algo", choices=["ahc", "kmeans", "gmm"])
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--out", help="JSON output (default stdout)")
    s.add_argument("--reduced", help="write a CSV with the selected columns only")
    s.set_defaults(func=cmd_select)

    f = sub.add_parser("fit", help="run the GP symbolic regressor")
    f.add_argument("dataset")
    f.add_argument("--seed", type=int)
    f.add_argument("--out", help="JSON file with the model and search statistics")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", help="score a model against a dataset")
    e.add_argument("dataset")
    e.add_argument("--model", required=True, help="expression over x1..xp")
    e.add_argument("--tol", type=float, default=DEFAULT_TOL)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("run", help="run an experiment grid from --config")
    r.add_argument("--output-dir")
    r.add_argument("--retry-failed", action="store_true")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="aggregate stored records into a CSV table")
    rp.add_argument("results")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    conf = load_config(args.config)
    if args.command == "run" and not conf:
        print("run needs --config", file=sys.stderr)
        return 2
    return args.func(args, conf)


if __name__ == "__main__":
    sys.exit(main())
