"""Experiment command line: train, sweep, bench, estimate-gamma, eval.

Exit codes: 0 success, 1 compute error, 2 configuration error.

Configs are flat ``key = value`` files; ``--set key=value`` overrides any
key.  Example::

    dataset = two_rings
    noise_sd = 0.4
    family = cnm
    k = 8
    seeds = 0, 1, 2, 3, 4
    out_dir = runs/rings
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .data import DataError, Dataset, binarize, estimate_gamma, load_csv, load_libsvm, make_two_rings, standardize
from .evaluation import (
    bench_projection,
    bench_to_csv,
    bench_to_json,
    evaluate,
    evaluate_ovr,
)
from .kernels import KernelSpec, approx_mse
from .maps import load_map, save_map
from .train import (
    TrainConfig,
    alternate,
    load_model,
    save_model,
    train_circulant_cnm,
    train_cnm,
    train_kernel_approx,
    train_random_features,
)

FAMILIES = ("dense-rffm", "cnm", "cnm-kerapp", "circulant-random", "circulant-optimized")
# phase offsets per family when with_phases = auto
DEFAULT_PHASES = {
    "dense-rffm": True,
    "cnm": False,
    "cnm-kerapp": True,
    "circulant-random": False,
    "circulant-optimized": False,
}


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _str_list(text: str) -> list[str]:
    return [tok for tok in text.replace(",", " ").split()]


def _opt(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none") else conv(text)
    return parse


@dataclass
class ExperimentConfig:
    dataset: str = "two_rings"          # "two_rings" or a .libsvm/.svm/.txt/.csv path
    test_dataset: str | None = None
    label_column: int = 0
    header: bool = False
    positive_class: int | None = None   # binarize as one-vs-rest for this class
    standardize: bool = False
    # synthetic rings
    n_per_class: int = 1000
    inner_radius: float = 1.0
    outer_radius: float = 3.0
    noise_sd: float = 0.1
    data_seed: int = 100
    test_seed: int = 200
    # kernel
    gamma: str = "auto"
    gamma_seed: int = 0
    gamma_sample_n: int = 1000
    gamma_nn_rank: int = 50
    # maps and training
    family: str = "cnm"
    families: list = field(default_factory=lambda: ["dense-rffm", "cnm"])
    k: int = 8
    k_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    with_phases: str = "auto"
    T: int = 10
    T1: int = 100
    T2: int = 100
    batch_size: int = 500
    lam: float = 1e-4
    eta0: float | None = None
    theta_decay: float = 0.0
    continue_steps: bool = True
    mse_eta0: float = 10.0
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs/default"

    PARSERS = {
        "test_dataset": _opt(str),
        "label_column": int,
        "header": _bool,
        "positive_class": _opt(int),
        "standardize": _bool,
        "n_per_class": int,
        "inner_radius": float,
        "outer_radius": float,
        "noise_sd": float,
        "data_seed": int,
        "test_seed": int,
        "gamma_seed": int,
        "gamma_sample_n": int,
        "gamma_nn_rank": int,
        "families": _str_list,
        "k": int,
        "k_list": _int_list,
        "T": int,
        "T1": int,
        "T2": int,
        "batch_size": int,
        "lam": float,
        "eta0": _opt(float),
        "theta_decay": float,
        "continue_steps": _bool,
        "mse_eta0": float,
        "seeds": _int_list,
    }

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.strip()
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            conv = cls.PARSERS.get(key, str)
            try:
                kwargs[key] = conv(raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        if self.dataset != "two_rings":
            need(Path(self.dataset).is_file(), "dataset", f"file not found: {self.dataset}")
        if self.test_dataset is not None:
            need(Path(self.test_dataset).is_file(), "test_dataset", f"file not found: {self.test_dataset}")
        need(self.family in FAMILIES, "family", f"must be one of {', '.join(FAMILIES)}")
        for fam in self.families:
            need(fam in FAMILIES, "families", f"unknown family {fam!r}")
        need(self.k >= 1, "k", "must be >= 1")
        need(self.k_list and all(k >= 1 for k in self.k_list), "k_list", "need positive integers")
        need(len(self.seeds) >= 1, "seeds", "need at least one seed")
        need(len(set(self.seeds)) == len(self.seeds), "seeds", "duplicate seeds")
        need(self.with_phases in ("auto", "on", "off"), "with_phases", "must be auto, on or off")
        if self.gamma != "auto":
            try:
                g = float(self.gamma)
            except ValueError:
                raise ConfigError("gamma: must be 'auto' or a positive number") from None
            need(g > 0, "gamma", "must be positive")
        need(self.n_per_class >= 1, "n_per_class", "must be >= 1")
        need(self.outer_radius > self.inner_radius + 3 * self.noise_sd, "outer_radius",
             "must exceed inner_radius + 3*noise_sd")
        for name in ("T1", "T2", "batch_size", "gamma_sample_n", "gamma_nn_rank"):
            need(getattr(self, name) >= 1, name, "must be >= 1")
        need(self.T >= 0, "T", "must be >= 0")
        need(self.lam > 0, "lam", "must be positive")
        need(self.eta0 is None or self.eta0 > 0, "eta0", "must be positive")
        need(self.theta_decay >= 0, "theta_decay", "must be nonnegative")
        need(self.mse_eta0 > 0, "mse_eta0", "must be positive")

    def train_config(self, k: int, seed: int) -> TrainConfig:
        return TrainConfig(k=k, T=self.T, T1=self.T1, T2=self.T2, batch_size=self.batch_size, lam=self.lam,
                           seed=seed, theta_decay=self.theta_decay, eta0=self.eta0,
                           continue_steps=self.continue_steps, mse_eta0=self.mse_eta0)

    def phases_for(self, family: str) -> bool:
        if self.with_phases == "auto":
            return DEFAULT_PHASES[family]
        return self.with_phases == "on"

    def to_dict(self) -> dict:
        return asdict(self)


def read_config(path, overrides=()) -> ExperimentConfig:
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config: file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        parser.read_string("[experiment]\n" + path.read_text())
        values.update(parser["experiment"])
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = item.split("=", 1)
        values[key.strip()] = val.strip()
    return ExperimentConfig.from_mapping(values)


# ---------------------------------------------------------------------------
# data plumbing


def load_any(path, label_column=0, header=False) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"dataset: file not found: {path}")
    if path.suffix.lower() == ".csv":
        return load_csv(path, label_column, header)
    return load_libsvm(path)


def load_experiment_data(cfg: ExperimentConfig):
    """Returns (train, test-or-None, protocol notes)."""
    notes = {}
    if cfg.dataset == "two_rings":
        args = (cfg.n_per_class, cfg.inner_radius, cfg.outer_radius, cfg.noise_sd)
        train = make_two_rings(*args, seed=cfg.data_seed)
        test = make_two_rings(*args, seed=cfg.test_seed)
    else:
        train = load_any(cfg.dataset, cfg.label_column, cfg.header)
        test = None
        if cfg.test_dataset is not None:
            test = load_any(cfg.test_dataset, cfg.label_column, cfg.header)
            if test.d < train.d:
                test = Dataset(np.pad(test.features, ((0, 0), (0, train.d - test.d))), test.labels, name=test.name)
            elif test.d > train.d:
                train = Dataset(np.pad(train.features, ((0, 0), (0, test.d - train.d))), train.labels,
                                name=train.name)
    if cfg.standardize:
        if test is None:
            train = standardize(train)
        else:
            train, test = standardize(train, test)
    notes["standardize"] = cfg.standardize
    if cfg.positive_class is not None:
        train = binarize(train, cfg.positive_class)
        test = binarize(test, cfg.positive_class) if test is not None else None
        notes["task"] = f"binary: class {cfg.positive_class} vs rest"
    elif train.is_binary():
        notes["task"] = "binary"
    elif len(np.unique(train.labels)) == 2:
        classes = np.unique(train.labels)
        train = binarize(train)
        test = binarize(test, classes[1]) if test is not None else None
        notes["task"] = f"binary: class {int(classes[1])} as +1"
    else:
        notes["task"] = "one-vs-rest"
    return train, test, notes


def resolve_gamma(cfg: ExperimentConfig, train: Dataset) -> float:
    if cfg.gamma != "auto":
        return float(cfg.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return estimate_gamma(train, cfg.gamma_sample_n, cfg.gamma_nn_rank, np.random.default_rng(cfg.gamma_seed))


# ---------------------------------------------------------------------------
# single run


def fit_family(family: str, train: Dataset, test, tcfg: TrainConfig, spec: KernelSpec, with_phases: bool):
    """Train one binary model. Returns (map, model, trace)."""
    if family == "dense-rffm":
        return train_random_features(train, tcfg, spec, "dense", test, with_phases)
    if family == "circulant-random":
        return train_random_features(train, tcfg, spec, "circulant", test, with_phases)
    if family == "cnm":
        return train_cnm(train, tcfg, spec, test, with_phases)
    if family == "circulant-optimized":
        return train_circulant_cnm(train, tcfg, spec, test, with_phases)
    if family == "cnm-kerapp":
        fmap, ktrace = train_kernel_approx(train, tcfg, spec, with_phases)
        fmap, model, ctrace = alternate(train, tcfg, fmap, None, test)
        # kernel-fit records first (iter 0..T), then the w-training records
        offset = ktrace.last.iter
        for rec in ctrace.records:
            rec.iter += offset
            rec.mse = ktrace.last.mse
            ktrace.append(rec)
        return fmap, model, ktrace
    raise ValueError(f"unknown family {family!r}")


def run_one(cfg: ExperimentConfig, family: str, k: int, seed: int, train, test, spec):
    """Train (binary or one-vs-rest) and evaluate. Returns (result row, artifacts)."""
    tcfg = cfg.train_config(k, seed)
    phases = cfg.phases_for(family)
    eval_set = test if test is not None else train
    if train.is_binary():
        fmap, model, trace = fit_family(family, train, test, tcfg, spec, phases)
        report = evaluate(model, fmap, eval_set)
        train_acc = evaluate(model, fmap, train).accuracy
        maps, models, traces = {None: fmap}, {None: model}, {None: trace}
        mse_map = fmap
    else:
        maps, models, traces = {}, {}, {}
        for c in np.unique(train.labels):
            c = int(c)
            btrain = binarize(train, c)
            btest = binarize(test, c) if test is not None else None
            maps[c], models[c], traces[c] = fit_family(family, btrain, btest, tcfg, spec, phases)
        report = evaluate_ovr(models, maps, eval_set)
        train_acc = evaluate_ovr(models, maps, train).accuracy
        mse_map = maps[min(maps)]
    mse = approx_mse(mse_map, spec, train, rng=np.random.default_rng(seed))
    row = {"family": family, "k": k, "seed": seed, "train_acc": train_acc,
           "accuracy": report.accuracy, "mse": mse}
    return row, (maps, models, traces)


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def aggregate(rows, keys, metrics):
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, grp in groups.items():
        agg = dict(zip(keys, key))
        agg["n_seeds"] = len(grp)
        for m in metrics:
            vals = np.array([r[m] for r in grp], dtype=np.float64)
            agg[f"{m}_mean"] = float(vals.mean())
            agg[f"{m}_sd"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(agg)
    return out


def write_manifest(out: Path, cfg: ExperimentConfig, command: str, gamma: float, notes: dict, wall: float,
                   extra: dict | None = None):
    manifest = {
        "command": command,
        "config": cfg.to_dict(),
        "resolved_gamma": gamma,
        "seeds": cfg.seeds,
        "protocol": notes,
        "versions": {"cnmaps": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time_seconds": wall,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _suffix(seed, cls):
    return f"seed{seed}" if cls is None else f"seed{seed}_class{cls}"


# ---------------------------------------------------------------------------
# commands


def cmd_train(cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    train, test, notes = load_experiment_data(cfg)
    gamma = resolve_gamma(cfg, train)
    spec = KernelSpec(gamma)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in cfg.seeds:
        row, (maps, models, traces) = run_one(cfg, cfg.family, cfg.k, seed, train, test, spec)
        rows.append(row)
        for cls in maps:
            tag = _suffix(seed, cls)
            save_map(maps[cls], out / f"map_{tag}.json")
            save_model(models[cls], out / f"model_{tag}.json")
            traces[cls].to_csv(out / f"trace_{tag}.csv")
    cols = ["family", "k", "seed", "train_acc", "accuracy", "mse"]
    write_rows(out / "results.csv", rows, cols)
    agg = aggregate(rows, ["family", "k"], ["train_acc", "accuracy", "mse"])
    write_rows(out / "aggregate.csv", agg, list(agg[0]))
    write_manifest(out, cfg, "train", gamma, notes, time.perf_counter() - start)
    for row in rows:
        print(f"seed {row['seed']}: accuracy {row['accuracy']:.4f}  mse {row['mse']:.5f}")
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    train, test, notes = load_experiment_data(cfg)
    gamma = resolve_gamma(cfg, train)
    spec = KernelSpec(gamma)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for family in cfg.families:
        for k in cfg.k_list:
            for seed in cfg.seeds:
                row, _ = run_one(cfg, family, k, seed, train, test, spec)
                rows.append(row)
                print(f"{family:>20s} k={k:<5d} seed={seed:<3d} acc={row['accuracy']:.4f} mse={row['mse']:.5f}")
    write_rows(out / "sweep.csv", rows, ["family", "k", "seed", "accuracy", "mse"])
    agg = aggregate(rows, ["family", "k"], ["accuracy", "mse"])
    write_rows(out / "sweep_aggregate.csv", agg, list(agg[0]))
    write_manifest(out, cfg, "sweep", gamma, notes, time.perf_counter() - start)
    return 0


def cmd_bench(d_list, reps, k_mode, out) -> int:
    if reps < 5:
        raise ConfigError(f"reps: need at least 5 repetitions, got {reps}")
    records = bench_projection(d_list, k_mode, reps)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    bench_to_csv(records, out)
    bench_to_json(records, out.with_suffix(".json"))
    for r in records:
        print(f"d={r.d:<6d} k={r.k:<6d} {r.family:>9s} {r.median_seconds * 1e3:10.4f} ms")
    return 0


def cmd_estimate_gamma(path, seed, sample_n, nn_rank, label_column=0, header=False) -> int:
    ds = load_any(path, label_column, header)
    gamma = estimate_gamma(ds, sample_n, nn_rank, np.random.default_rng(seed))
    print(repr(gamma))
    return 0


def cmd_eval(map_path, model_path, data_path, label_column=0, header=False, positive_class=None,
             out=None) -> int:
    for name, p in (("map", map_path), ("model", model_path)):
        if not Path(p).is_file():
            raise ConfigError(f"{name}: file not found: {p}")
    fmap, model = load_map(map_path), load_model(model_path)
    ds = load_any(data_path, label_column, header)
    if positive_class is not None:
        ds = binarize(ds, positive_class)
    elif not ds.is_binary():
        ds = binarize(ds)
    if ds.d < fmap.d:
        ds = Dataset(np.pad(ds.features, ((0, 0), (0, fmap.d - ds.d))), ds.labels, name=ds.name)
    report = evaluate(model, fmap, ds)
    print(f"accuracy {report.accuracy:.4f}  mean_hinge {report.mean_hinge:.4f}  n_test {report.n_test}")
    if out is not None:
        out = Path(out)
        report.to_json(out.with_suffix(".json"))
        report.to_csv(out.with_suffix(".csv"))
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cnmaps", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("train", "sweep"):
        sp = sub.add_parser(name, help=f"{name} from a config file")
        sp.add_argument("--config", "-c", help="flat key = value config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")

    sp = sub.add_parser("bench", help="time dense vs circulant projection")
    sp.add_argument("--d-list", default="512,2048,8192")
    sp.add_argument("--reps", type=int, default=5)
    sp.add_argument("--k-mode", default="k=d", choices=["k=d", "k=2d"])
    sp.add_argument("--out", default="bench.csv")

    sp = sub.add_parser("estimate-gamma", help="bandwidth heuristic on a dataset file")
    sp.add_argument("data")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sample-n", type=int, default=1000)
    sp.add_argument("--nn-rank", type=int, default=50)
    sp.add_argument("--label-column", type=int, default=0)
    sp.add_argument("--header", action="store_true")

    sp = sub.add_parser("eval", help="evaluate a saved map + model on a dataset")
    sp.add_argument("--map", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--label-column", type=int, default=0)
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--positive-class", type=int)
    sp.add_argument("--out", help="write report to OUT.json and OUT.csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("train", "sweep"):
            cfg = read_config(args.config, args.set)
            return cmd_train(cfg) if args.command == "train" else cmd_sweep(cfg)
        if args.command == "bench":
            try:
                d_list = _int_list(args.d_list)
            except ValueError:
                raise ConfigError(f"d-list: not a list of integers: {args.d_list!r}") from None
            return cmd_bench(d_list, args.reps, args.k_mode, args.out)
        if args.command == "estimate-gamma":
            return cmd_estimate_gamma(args.data, args.seed, args.sample_n, args.nn_rank,
                                      args.label_column, args.header)
        if args.command == "eval":
            return cmd_eval(args.map, args.model, args.data, args.label_column, args.header,
                            args.positive_class, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
