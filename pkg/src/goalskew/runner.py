"""Experiment runner: parses flat key=value configs, executes seeded
experiment grids, and emits deterministic CSVs plus a JSON manifest.

Identical config and seeds produce byte-identical CSV files; floats are
written with ``repr`` so parsed values round-trip exactly. The manifest
records the config hash, library versions, and wall time, and is the only
output that is allowed to differ between repeated runs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ablation import METHODS, make_imbalanced_dataset, variance_ablation
from .agent import train_joint
from .envs import FourRooms, Labyrinth
from .errors import InvalidInputError
from .metrics import REPORT_COLUMNS
from .rng import as_generator
from .skew import SkewConfig, run_skew_refit
from .theory import (cov_log_densities, iterate_power_normalize, random_full_support,
                     verify_entropy_derivative, verify_entropy_gain)

EXPERIMENTS = ("four_rooms_oracle", "labyrinth_joint", "variance_ablation", "lemma_suite")

_DEFAULTS = {
    "four_rooms_oracle": {
        "alpha_list": (-1.0, -0.75, -0.5, -0.25, 0.0),
        "seeds": (0, 1, 2, 3, 4),
        "iterations": 100,
        "skew.n_collect": 500,
        "skew.resample_size": 5000,
        "skew.goal_source": "model",
        "fourrooms.side": 11.0,
        "fourrooms.noise_sigma": 0.0605,
        "fourrooms.reach_mode": "project",
        "model.resolution": 11,
        "model.floor": 1e-3,
        "metrics.grid_resolution": 11,
    },
    "labyrinth_joint": {
        "alpha_list": (-1.0, 0.0),
        "seeds": (0, 1, 2, 3, 4, 5),
        "iterations": 300,
        "skew.n_collect": 15,
        "skew.resample_size": 400,
        "skew.goal_source": "model",
        "labyrinth.map": "spiral15",
        "labyrinth.horizon": 60,
        "agent.learning_rate": 0.1,
        "agent.discount": 0.95,
        "agent.epsilon": 0.2,
        "agent.updates_per_transition": 3,
        "agent.buffer_capacity": 100000,
        "model.floor": 1e-3,
    },
    "variance_ablation": {
        "alpha_list": (0.0, -0.5, -1.0, -2.0, -3.0),
        "seeds": tuple(range(10)),
        "iterations": 1,
        "dataset.n": 2000,
        "dataset.common_fraction": 0.95,
        "ablation.draws": 200,
        "ablation.batch_size": 64,
        "model.resolution": 11,
        "model.floor": 1e-3,
    },
    "lemma_suite": {
        "alpha_list": (-1.0,),
        "seeds": (0,),
        "iterations": 1,
        "suite.derivative_pairs": 100,
        "suite.derivative_atoms": 8,
        "suite.gain_pairs": 500,
        "suite.gain_atoms": 16,
        "suite.convergence_dists": 50,
        "suite.convergence_atoms": 16,
        "suite.gammas": (0.3, 0.5, 0.9),
    },
}


@dataclass
class ExperimentConfig:
    """Validated experiment description (defaults merged with file and CLI)."""

    experiment: str
    alpha_list: tuple
    seeds: tuple
    iterations: int
    out_dir: Path
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(
                f"experiment: unknown value {self.experiment!r}, expected one of {EXPERIMENTS}"
            )
        if not self.seeds:
            raise InvalidInputError("seeds: list must not be empty")
        for a in self.alpha_list:
            if not -10.0 <= a <= 0.0:
                raise InvalidInputError(f"alpha_list: value {a} outside [-10, 0]")
        if self.iterations < 0:
            raise InvalidInputError("iterations: must be >= 0")
        self.out_dir = Path(self.out_dir)

    def opt(self, key: str):
        if key in self.options:
            return self.options[key]
        return _DEFAULTS[self.experiment][key]


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; keys may be dotted."""
    entries = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line {n}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise InvalidInputError(f"config line {n}: empty key")
        entries[key] = value.strip()
    return entries


def _parse_scalar(key: str, text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        f = float(text)
    except ValueError:
        return text
    return int(f) if f.is_integer() and "." not in text and "e" not in low else f


def _parse_value(key: str, text: str):
    if "," in text:
        return tuple(_parse_scalar(key, part.strip()) for part in text.split(",") if part.strip())
    return _parse_scalar(key, text)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge file entries and override mapping into a validated config.

    Raises InvalidInputError naming the offending field on any bad value.
    """
    entries: dict = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        entries.update({k: _parse_value(k, v) for k, v in parse_config_text(text).items()})
    for key, value in (overrides or {}).items():
        if value is not None:
            entries[key] = value

    experiment = entries.pop("experiment", None)
    if experiment is None:
        raise InvalidInputError("experiment: missing (set it in the config or with --experiment)")
    if experiment not in _DEFAULTS:
        raise InvalidInputError(
            f"experiment: unknown value {experiment!r}, expected one of {EXPERIMENTS}"
        )
    defaults = _DEFAULTS[experiment]

    def take(key, fallback):
        return entries.pop(key, fallback)

    alphas = take("alpha_list", defaults["alpha_list"])
    alphas = tuple(float(a) for a in (alphas if isinstance(alphas, tuple) else (alphas,)))
    seeds = take("seeds", defaults["seeds"])
    seeds = tuple(int(s) for s in (seeds if isinstance(seeds, tuple) else (seeds,)))
    iterations = int(take("iterations", defaults["iterations"]))
    out_dir = Path(take("out_dir", "results"))

    options = {}
    for key, value in entries.items():
        if key not in defaults:
            raise InvalidInputError(f"{key}: unknown option for experiment {experiment!r}")
        options[key] = value
    return ExperimentConfig(experiment=experiment, alpha_list=alphas, seeds=seeds,
                            iterations=iterations, out_dir=out_dir, options=options)


# -- CSV / JSON emission ----------------------------------------------------


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def _run_name(alpha: float, seed: int) -> str:
    return f"alpha_{alpha:g}_seed_{seed}.csv"


# -- experiments -------------------------------------------------------------


def _run_four_rooms(cfg: ExperimentConfig):
    env = FourRooms(side=float(cfg.opt("fourrooms.side")),
                    noise_sigma=float(cfg.opt("fourrooms.noise_sigma")),
                    reach_mode=str(cfg.opt("fourrooms.reach_mode")))
    per_run = {}
    for alpha in cfg.alpha_list:
        for seed in cfg.seeds:
            skew_cfg = SkewConfig(alpha=alpha,
                                  n_collect=int(cfg.opt("skew.n_collect")),
                                  resample_size=int(cfg.opt("skew.resample_size")),
                                  goal_source=str(cfg.opt("skew.goal_source")))
            run = run_skew_refit(env, env.reach, skew_cfg, cfg.iterations, seed,
                              model_resolution=int(cfg.opt("model.resolution")),
                              floor=float(cfg.opt("model.floor")),
                              grid_resolution=int(cfg.opt("metrics.grid_resolution")))
            per_run[(alpha, seed)] = [r.row() for r in run.reports]
    summary = []
    for alpha in cfg.alpha_list:
        terminal = [per_run[(alpha, s)][-1] for s in cfg.seeds if per_run[(alpha, s)]]
        ents = [row[2] for row in terminal]
        cells = [row[3] for row in terminal]
        summary.append((alpha, float(np.mean(ents)), float(np.std(ents)),
                        float(np.mean(cells)), len(cfg.seeds)))
    return (REPORT_COLUMNS, per_run,
            ("alpha", "mean_terminal_entropy", "std_terminal_entropy",
             "mean_terminal_cells", "n_seeds"), summary)


def _make_labyrinth(cfg: ExperimentConfig) -> Labyrinth:
    name = str(cfg.opt("labyrinth.map"))
    horizon = int(cfg.opt("labyrinth.horizon"))
    if name == "spiral15":
        return Labyrinth.spiral_default(horizon=horizon)
    return Labyrinth.from_file(name, horizon=horizon)


def _run_labyrinth(cfg: ExperimentConfig):
    env = _make_labyrinth(cfg)
    n_valid = len(env.valid_cells())
    per_run = {}
    for alpha in cfg.alpha_list:
        for seed in cfg.seeds:
            skew_cfg = SkewConfig(alpha=alpha,
                                  n_collect=int(cfg.opt("skew.n_collect")),
                                  resample_size=int(cfg.opt("skew.resample_size")),
                                  goal_source=str(cfg.opt("skew.goal_source")))
            result = train_joint(
                env, skew_cfg, cfg.iterations, seed,
                learning_rate=float(cfg.opt("agent.learning_rate")),
                discount=float(cfg.opt("agent.discount")),
                epsilon=float(cfg.opt("agent.epsilon")),
                buffer_capacity=int(cfg.opt("agent.buffer_capacity")),
                updates_per_transition=int(cfg.opt("agent.updates_per_transition")),
                model_floor=float(cfg.opt("model.floor")),
            )
            rows = [(rep.iteration, rep.cells_visited, rep.cells_visited / n_valid,
                     rep.entropy_nats, rep.alpha, rep.seed)
                    for rep in result.reports]
            per_run[(alpha, seed)] = rows
    summary = []
    for alpha in cfg.alpha_list:
        finals = [per_run[(alpha, s)][-1][1] for s in cfg.seeds if per_run[(alpha, s)]]
        summary.append((alpha, float(np.mean(finals)), float(np.std(finals)),
                        float(np.mean(finals)) / n_valid, len(cfg.seeds)))
    return (("epoch", "cells_visited", "fraction_of_valid", "entropy_nats", "alpha", "seed"),
            per_run,
            ("alpha", "mean_final_coverage", "std_final_coverage",
             "mean_fraction_of_valid", "n_seeds"), summary)


def _run_ablation(cfg: ExperimentConfig):
    per_run = {}
    for seed in cfg.seeds:
        data, bounds = make_imbalanced_dataset(
            int(cfg.opt("dataset.n")), seed=seed,
            common_fraction=float(cfg.opt("dataset.common_fraction")))
        res = variance_ablation(
            data, bounds, cfg.alpha_list,
            draws=int(cfg.opt("ablation.draws")),
            batch_size=int(cfg.opt("ablation.batch_size")),
            resolution=int(cfg.opt("model.resolution")),
            floor=float(cfg.opt("model.floor")),
            seed=seed + 10_000)
        for alpha in cfg.alpha_list:
            rows = per_run.setdefault((alpha, seed), [])
            for method in METHODS:
                rows.append((alpha, method, res[(alpha, method)], seed))
    summary = []
    for alpha in cfg.alpha_list:
        for method in METHODS:
            values = [row[2] for s in cfg.seeds for row in per_run[(alpha, s)]
                      if row[1] == method]
            summary.append((alpha, method, float(np.mean(values)), len(cfg.seeds)))
    return (("alpha", "method", "grad_variance", "seed"), per_run,
            ("alpha", "method", "mean_grad_variance", "n_seeds"), summary)


def run_lemma_suite(cfg: ExperimentConfig) -> dict:
    """Seeded verifier battery; returns the JSON-ready report."""
    seed = cfg.seeds[0]
    rng = as_generator(seed)
    report = {"seed": seed, "checks": []}

    n_pairs = int(cfg.opt("suite.derivative_pairs"))
    k = int(cfg.opt("suite.derivative_atoms"))
    worst = 0.0
    passed = 0
    for _ in range(n_pairs):
        p = random_full_support(k, rng)
        q = random_full_support(k, rng)
        check = verify_entropy_derivative(p, q, h=1e-4)
        worst = max(worst, check.abs_error)
        passed += check.passed
    report["checks"].append({
        "name": "entropy_derivative_identity",
        "pairs": n_pairs, "atoms": k, "passed": passed,
        "worst_abs_error": worst, "ok": passed == n_pairs,
    })

    n_pairs = int(cfg.opt("suite.gain_pairs"))
    k = int(cfg.opt("suite.gain_atoms"))
    tried = 0
    passed = 0
    while tried < n_pairs:
        p = random_full_support(k, rng)
        q = random_full_support(k, rng)
        if cov_log_densities(p, q) <= 0:
            continue
        tried += 1
        passed += verify_entropy_gain(p, q).passed
    report["checks"].append({
        "name": "entropy_gain_interval",
        "pairs": n_pairs, "atoms": k, "passed": passed, "ok": passed == n_pairs,
    })

    n_dists = int(cfg.opt("suite.convergence_dists"))
    k = int(cfg.opt("suite.convergence_atoms"))
    gammas = cfg.opt("suite.gammas")
    gammas = gammas if isinstance(gammas, tuple) else (gammas,)
    converged = 0
    total = 0
    for _ in range(n_dists):
        p0 = random_full_support(k, rng)
        for gamma in gammas:
            total += 1
            run = iterate_power_normalize(p0, float(gamma), max_iters=500, tol=1e-6)
            converged += run.converged
    report["checks"].append({
        "name": "power_iteration_convergence",
        "dists": n_dists, "atoms": k, "gammas": list(gammas),
        "converged": converged, "total": total, "ok": converged == total,
    })

    report["ok"] = all(c["ok"] for c in report["checks"])
    return report


def run(config_path=None, overrides: dict | None = None) -> int:
    """Execute the configured experiment grid; returns a process exit code."""
    t_start = time.time()
    try:
        cfg = load_config(config_path, overrides)
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    files = []
    try:
        if cfg.experiment == "lemma_suite":
            report = run_lemma_suite(cfg)
            path = out / "lemma_suite.json"
            path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
            files.append(path.name)
            ok = report["ok"]
        else:
            header, per_run, sum_header, summary = {
                "four_rooms_oracle": _run_four_rooms,
                "labyrinth_joint": _run_labyrinth,
                "variance_ablation": _run_ablation,
            }[cfg.experiment](cfg)
            for (alpha, seed), rows in sorted(per_run.items()):
                path = out / _run_name(alpha, seed)
                _write_csv(path, header, rows)
                files.append(path.name)
            _write_csv(out / "summary.csv", sum_header, summary)
            files.append("summary.csv")
            ok = True
    except Exception as exc:  # propagate a diagnostic, not a traceback
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1

    manifest = {
        "experiment": cfg.experiment,
        "alpha_list": list(cfg.alpha_list),
        "seeds": list(cfg.seeds),
        "iterations": cfg.iterations,
        "options": {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in sorted(cfg.options.items())},
        "config_sha256": _config_hash(cfg),
        "versions": {"goalskew": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": round(time.time() - t_start, 3),
        "files": files,
        "schema": 1,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                       encoding="utf-8")
    if not ok:
        print("one or more checks failed; see the JSON report", file=sys.stderr)
        return 1
    return 0


def _config_hash(cfg: ExperimentConfig) -> str:
    doc = {
        "experiment": cfg.experiment,
        "alpha_list": list(cfg.alpha_list),
        "seeds": list(cfg.seeds),
        "iterations": cfg.iterations,
        "options": {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in sorted(cfg.options.items())},
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="goalskew",
                                     description="Seeded coverage experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute an experiment grid from a config file")
    runp.add_argument("config", nargs="?", default=None,
                      help="flat key=value config file (optional if --experiment given)")
    runp.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    runp.add_argument("--alpha", type=float, nargs="+", default=None,
                      help="override alpha_list")
    runp.add_argument("--seeds", type=int, nargs="+", default=None)
    runp.add_argument("--iterations", type=int, default=None)
    runp.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "alpha_list": tuple(args.alpha) if args.alpha is not None else None,
        "seeds": tuple(args.seeds) if args.seeds is not None else None,
        "iterations": args.iterations,
        "out_dir": args.out,
    }
    return run(args.config, overrides)


if __name__ == "__main__":
    sys.exit(main())
