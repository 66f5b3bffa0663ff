"""Command-line experiment runner.

Each subcommand reads an optional INI config, applies flag overrides, runs
one experiment and writes a CSV plus a JSON sidecar holding the resolved
config and library versions.  Example::

    relu-landscape genuineness-scan --config scan.ini --out scan.csv
    relu-landscape gd-verify --k 10 --bias=20,3,0,-3,-20 --trials 20 --seed 0 --out gd.csv
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _rng, gauss1d
from .critical import NumericalFailure, assemble_system, loss_at_critical, solve_critical
from .dataset import (Dataset, DatasetError, IdxError, generate_gaussian_dataset, load_cifar10_binary_subset,
                      load_csv, load_mnist_binary_subset)
from .descent import DescentRow, descent_scan
from .genuineness import OrientationPolicy, ScanRow, draw_hidden_weights, genuineness_scan
from .geometry import WEIGHT_RANGE, cell_count, central_cell_count, mean_diameter
from .lpfeas import DEFAULT_BOX, DEFAULT_EPS
from .network import NetworkWeights, activated_fraction, activation_pattern

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

KINDS = ("gauss1d-prob", "genuineness-scan", "gd-verify", "cell-diameter", "cell-count", "critical")


class ConfigError(ValueError):
    pass


# Allowed keys per section, with the parser applied to each value.
def _ints(text):
    return [int(v) for v in _split(text)]


def _floats(text):
    return [float(v) for v in _split(text)]


def _split(text):
    parts = [p.strip() for p in str(text).split(",")]
    if not all(parts):
        raise ValueError(f"empty item in list {text!r}")
    return parts


SCHEMA = {
    "experiment": {"kind": str, "seed": int, "out": str, "trials": int, "biases": _floats,
                   "k": int, "threads": int},
    "dataset": {"type": str, "d": int, "n_per_class": int, "data_seed": int, "images": str,
                "labels": str, "batches": _split, "classes": _ints, "per_class": int, "path": str},
    "lp": {"box": float, "eps": float, "orientation": str},
    "gd": {"stepsize": float, "grad_tol": float, "max_iters": int, "log_dir": str},
    "gauss1d": {"mode": str, "n": int, "x_w2": float, "grid": _floats, "grid2": _floats,
                "positions": _floats, "normals": _floats, "move": _ints, "shifts": _floats,
                "mean_pos": float, "mean_neg": float},
    "geometry": {"n_weights": int, "n_directions": int, "n_list": _ints, "dim_list": _ints},
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    out: str = "results.csv"
    trials: int = 20
    biases: list = field(default_factory=lambda: [20.0, 3.0, 0.0, -3.0, -20.0])
    k: int = 10
    threads: int = 1
    dataset: dict = field(default_factory=lambda: {"type": "gaussian", "d": 3, "n_per_class": 1000,
                                                   "data_seed": 0})
    lp: dict = field(default_factory=lambda: {"box": DEFAULT_BOX, "eps": DEFAULT_EPS,
                                              "orientation": "default"})
    gd: dict = field(default_factory=lambda: {"stepsize": 1e-6, "grad_tol": 1e-3, "max_iters": 100_000})
    gauss1d: dict = field(default_factory=lambda: {"mode": "sweep", "n": 100, "x_w2": 0.0,
                                                   "grid": [0.1, 6.0, 60], "mean_pos": 1.0, "mean_neg": -1.0})
    geometry: dict = field(default_factory=lambda: {"n_weights": 1000})

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name in ("trials", "k", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.biases:
            raise ConfigError("bias list is empty")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for key in ("n_per_class", "d", "per_class"):
            if key in self.dataset and self.dataset[key] < 1:
                raise ConfigError(f"dataset.{key} must be positive")
        if self.gd["stepsize"] <= 0 or self.gd["grad_tol"] <= 0 or self.gd["max_iters"] < 1:
            raise ConfigError("gd knobs must be positive")
        if self.lp["box"] <= 0 or self.lp["eps"] <= 0:
            raise ConfigError("lp box and eps must be positive")
        if self.gauss1d.get("n", 1) < 1:
            raise ConfigError("gauss1d.n must be positive")
        for key in ("n_weights", "n_directions"):
            if key in self.geometry and self.geometry[key] < 1:
                raise ConfigError(f"geometry.{key} must be positive")
        try:
            OrientationPolicy.parse(self.lp["orientation"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def read_config(path) -> dict:
    """Parse an INI file into ``{section: {key: value}}`` rejecting unknown keys."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                out[section][key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
    return out


def build_config(kind: str, file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig(kind=kind)
    file_values = file_values or {}
    exp = dict(file_values.get("experiment", {}))
    if exp.pop("kind", kind) != kind:
        raise ConfigError(f"config is for a different experiment than {kind!r}")
    for key, val in exp.items():
        setattr(cfg, key, val)
    for section in ("dataset", "lp", "gd", "gauss1d", "geometry"):
        if section in file_values:
            merged = dict(getattr(cfg, section))
            if section == "dataset" and file_values[section].get("type", merged["type"]) != merged["type"]:
                merged = {}
            merged.update(file_values[section])
            setattr(cfg, section, merged)
    for key, val in (overrides or {}).items():
        if val is not None:
            setattr(cfg, key, val)
    cfg.validate()
    return cfg


def load_dataset(spec: dict) -> Dataset:
    kind = spec.get("type", "gaussian")
    try:
        if kind == "gaussian":
            return generate_gaussian_dataset(spec["d"], spec["n_per_class"], spec.get("data_seed", 0))
        if kind == "mnist":
            a, b = spec["classes"]
            return load_mnist_binary_subset(spec["images"], spec["labels"], a, b, spec["per_class"])
        if kind == "cifar10":
            a, b = spec["classes"]
            return load_cifar10_binary_subset(spec["batches"], a, b, spec["per_class"])
        if kind == "csv":
            return load_csv(spec["path"])
    except KeyError as exc:
        raise ConfigError(f"dataset type {kind!r} needs key {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, (DatasetError, IdxError)):
            raise
        raise ConfigError(f"dataset classes must be two values: {exc}") from exc
    raise ConfigError(f"unknown dataset type {kind!r}")


def _grid(values, name):
    if len(values) != 3 or int(values[2]) < 1:
        raise ConfigError(f"{name} must be 'start, stop, count'")
    return np.linspace(values[0], values[1], int(values[2]))


def fmt(v) -> str:
    """Deterministic CSV text for one value."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(fmt(x) for x in v)
    return str(v)


# --- experiments -----------------------------------------------------------------

def run_gauss1d(cfg: ExperimentConfig):
    g = cfg.gauss1d
    model = gauss1d.ClassModel1D(g.get("mean_pos", 1.0), g.get("mean_neg", -1.0))
    N = g.get("n", 100)
    mode = g.get("mode", "sweep")
    if mode == "sweep":
        rows = gauss1d.two_weight_sweep(_grid(g["grid"], "grid"), g.get("x_w2", 0.0), N, model)
        cols = ["x_w1", "x_w2", "h1_star", "h2_star", "p_g", "p_t"]
        return cols, [[r[c] for c in cols] for r in rows]
    if mode == "joint":
        g1, g2 = _grid(g["grid"], "grid"), _grid(g.get("grid2", g["grid"]), "grid2")
        pt = gauss1d.two_weight_joint(g1, g2, N, model)
        return ["x_w1", "x_w2", "p_t"], [[a, b, pt[i, j]] for i, a in enumerate(g1) for j, b in enumerate(g2)]
    if mode == "shift":
        try:
            base = gauss1d.Weights1D(g["positions"], g["normals"])
        except KeyError as exc:
            raise ConfigError(f"shift mode needs gauss1d.{exc.args[0]}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        shifts = _grid(g["shifts"], "shifts")
        rows = gauss1d.prob_landscape_scan(base, shifts, g.get("move"), N, model)
        cols = ["shift", "positions", "h_star", "p_g", "p_t"]
        return cols, [[r[c] for c in cols] for r in rows]
    if mode == "loss":
        x, y = gauss1d.sample_dataset(_rng.stream(cfg.seed, "gauss1d-loss"), N, model)
        x2 = g.get("x_w2", 0.0)
        out = []
        for x1 in _grid(g["grid"], "grid"):
            if x1 <= x2:
                continue
            w = gauss1d.Weights1D([x2, x1], [-1.0, 1.0])
            out.append([x1, x2, gauss1d.empirical_loss(w, x, y)])
        return ["x_w1", "x_w2", "loss"], out
    raise ConfigError(f"unknown gauss1d mode {mode!r}")


def run_genuineness(cfg: ExperimentConfig):
    data = load_dataset(cfg.dataset)
    policy = OrientationPolicy.parse(cfg.lp["orientation"])
    rows = genuineness_scan(data, cfg.k, cfg.biases, cfg.trials, cfg.seed, policy,
                            cfg.lp["box"], cfg.lp["eps"], cfg.threads)
    cols = list(ScanRow.COLUMNS)
    return cols, [[r.as_dict()[c] for c in cols] for r in rows]


def run_descent(cfg: ExperimentConfig):
    data = load_dataset(cfg.dataset)
    rows = descent_scan(data, cfg.k, cfg.biases, cfg.trials, cfg.seed, cfg.gd["stepsize"],
                        cfg.gd["grad_tol"], cfg.gd["max_iters"], cfg.threads)
    log_dir = cfg.gd.get("log_dir")
    if log_dir:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        for r in rows:
            for t, o in enumerate(r.outcomes):
                o.write_log(Path(log_dir) / f"gd_bias{fmt(r.bias)}_trial{t}.csv")
    cols = list(DescentRow.COLUMNS)
    return cols, [[r.as_dict()[c] for c in cols] for r in rows]


def run_diameter(cfg: ExperimentConfig):
    data = load_dataset(cfg.dataset)
    geo = cfg.geometry
    res = mean_diameter(data, geo.get("n_weights", 1000), cfg.seed, geo.get("n_directions"), cfg.threads)
    name = cfg.dataset.get("type", "gaussian")
    return (["dataset", "N", "mean_diameter", "open_count", "n_weights", "seed"],
            [[name, res.N, res.mean, res.open_count, res.n_weights, res.seed]])


def run_cell_count(cfg: ExperimentConfig):
    geo = cfg.geometry
    n_list = geo.get("n_list", [1000])
    dim_list = geo.get("dim_list", [10])
    if min(n_list) < 0 or min(dim_list) < 1:
        raise ConfigError("cell counts need N >= 0 and dim >= 1")
    return (["N", "dim", "cell_count", "central_cell_count"],
            [[n, d, cell_count(n, d), central_cell_count(n, d)] for n in n_list for d in dim_list])


def run_critical(cfg: ExperimentConfig):
    data = load_dataset(cfg.dataset)
    rows = []
    for bias in cfg.biases:
        for t in range(cfg.trials):
            w = draw_hidden_weights(_rng.stream(cfg.seed, t, "w"), cfg.k, data.d, bias)
            pattern = activation_pattern(NetworkWeights.with_unit_output(w), data)
            system = assemble_system(pattern, data)
            sol = solve_critical(system)
            rows.append([bias, t, sol.rank, sol.n, sol.kind.value, loss_at_critical(system, sol),
                         100.0 * activated_fraction(pattern)])
    return ["bias", "trial", "rank", "unknowns", "kind", "loss", "activated_pct"], rows


RUNNERS = {
    "gauss1d-prob": run_gauss1d,
    "genuineness-scan": run_genuineness,
    "gd-verify": run_descent,
    "cell-diameter": run_diameter,
    "cell-count": run_cell_count,
    "critical": run_critical,
}


def write_outputs(cfg: ExperimentConfig, columns, rows) -> Path:
    out = Path(cfg.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    sidecar = {
        "config": asdict(cfg),
        "seed": cfg.seed,
        "rng": _rng.GENERATOR,
        "columns": list(columns),
        "rows": len(rows),
        "versions": {"relu_landscape": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    if cfg.kind == "cell-diameter":
        sidecar["weight_range"] = list(WEIGHT_RANGE)
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def run_experiment(cfg: ExperimentConfig) -> Path:
    columns, rows = RUNNERS[cfg.kind](cfg)
    return write_outputs(cfg, columns, rows)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relu-landscape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="INI file with experiment settings")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--trials", type=int)
        p.add_argument("--bias", dest="biases", type=_floats,
                       help="comma-separated biases; use --bias=-3,-20 for negative values")
        p.add_argument("--k", type=int)
        p.add_argument("--threads", type=int)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        file_values = read_config(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in ("seed", "out", "trials", "biases", "k", "threads")}
        cfg = build_config(args.kind, file_values, overrides)
        out = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, IdxError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
