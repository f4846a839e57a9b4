"""Command-line entry point: prepare -> train -> eval -> benchmark -> plot.

A JSON run configuration describes datasets and hyperparameters (keys mirror
the benchmark defaults; see README). Command-line flags override file values.
Every emitted file is a pure function of (config, seed): reruns on one thread
produce byte-identical outputs.

Output layout, per dataset/subset:

    <out>/<dataset>/<subset>/cache/train.wset, test.wset, manifest.json
    <out>/<dataset>/<subset>/<model>/params.qad, history.csv, threshold.json,
                                     report.json, report.csv, violin.csv,
                                     violin.svg
    <out>/<dataset>/benchmark.csv, benchmark.json
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical_ae as cae
from . import evaluation as ev
from . import pipeline as pl
from . import qae
from . import train as tr
from .errors import (ConfigurationError, ContractViolationError, DatasetError,
                     IngestionError, InputError, QaeadError)
from .serialize import read_container

BENCHMARK_MODELS = (("qae", None), ("ae", (3,)), ("ae", (16, 8)), ("ae", (256, 128)))

DEFAULT_MODEL_SECTION = {
    "kind": "qae",
    "hidden": [16, 8],
    "qubits": 8,
    "layers": 100,
    "measure_qubits": [0, 1],
    "reg_param_weights": 1e-2,
    "reg_param_bias": 1e-4,
    "init_scale": 1e-2,
}

DEFAULT_TRAIN_SECTION = {
    "epochs": 200,
    "batch_size": 32,
    "learning_rate": 1e-3,
    "early_stop_threshold": 1e-5,
    "patience": 10,
}


@dataclass
class SubsetSpec:
    name: str
    schema: str
    window: int
    stride: int
    split_fraction: float
    feature_columns: list | None
    label_column: object | None
    label_columns: list | None
    values: str | None = None
    train_values: str | None = None
    test_values: str | None = None
    train_labels: str | None = None
    test_labels: str | None = None

    def fingerprint_dict(self) -> dict:
        return {
            "schema": self.schema, "window": self.window, "stride": self.stride,
            "split_fraction": self.split_fraction,
            "feature_columns": self.feature_columns,
            "label_column": self.label_column, "label_columns": self.label_columns,
            "values": self.values, "train_values": self.train_values,
            "test_values": self.test_values, "train_labels": self.train_labels,
            "test_labels": self.test_labels,
        }


@dataclass
class DatasetSpec:
    name: str
    subsets: list[SubsetSpec] = field(default_factory=list)


@dataclass
class RunConfig:
    out: Path
    seed: int
    model_section: dict
    train_section: dict
    percentile: float
    datasets: list[DatasetSpec]

    def train_config(self) -> tr.TrainConfig:
        s = self.train_section
        return tr.TrainConfig(
            epochs=int(s["epochs"]), batch_size=int(s["batch_size"]),
            learning_rate=float(s["learning_rate"]),
            early_stop_threshold=float(s["early_stop_threshold"]),
            patience=int(s["patience"]), seed=self.seed)

    def qae_config(self) -> qae.QaeConfig:
        m = self.model_section
        return qae.QaeConfig(
            n_qubits=int(m["qubits"]), n_layers=int(m["layers"]),
            trash_qubits=tuple(m["measure_qubits"]),
            reg_weights=float(m["reg_param_weights"]),
            reg_bias=float(m["reg_param_bias"]),
            init_scale=float(m["init_scale"]), seed=self.seed)

    def ae_config(self, input_dim: int, hidden) -> cae.AeConfig:
        return cae.AeConfig(input_dim=input_dim, hidden_sizes=tuple(hidden),
                            seed=self.seed,
                            init_scale=float(self.model_section["init_scale"]))


def model_dir_name(kind: str, hidden=None) -> str:
    if kind == "qae":
        return "qae"
    return "ae-" + "-".join(str(h) for h in hidden)


def load_run_config(path, overrides: argparse.Namespace | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None

    model_section = {**DEFAULT_MODEL_SECTION, **raw.get("model", {})}
    train_section = {**DEFAULT_TRAIN_SECTION, **raw.get("train", {})}
    out = Path(raw.get("out", "runs"))
    seed = int(raw.get("seed", 42))
    percentile = float(raw.get("eval", {}).get("threshold_percentile", 99.0))

    datasets = []
    for ds in raw.get("datasets", []):
        if "name" not in ds:
            raise ConfigurationError(f"{path}: dataset entry without a name")
        subsets = []
        for sub in ds.get("subsets", []):
            if "name" not in sub:
                raise ConfigurationError(
                    f"{path}: subset without a name in dataset {ds['name']!r}")
            merged = {**ds, **sub}
            spec = SubsetSpec(
                name=sub["name"],
                schema=merged.get("schema", "generic-csv"),
                window=int(merged.get("window", 100)),
                stride=int(merged.get("stride", 50)),
                split_fraction=float(merged.get("split_fraction", 0.5)),
                feature_columns=merged.get("feature_columns"),
                label_column=merged.get("label_column"),
                label_columns=merged.get("label_columns"),
                values=merged.get("values"),
                train_values=merged.get("train_values"),
                test_values=merged.get("test_values"),
                train_labels=merged.get("train_labels"),
                test_labels=merged.get("test_labels"),
            )
            if spec.values is None and (spec.train_values is None
                                        or spec.test_values is None):
                raise ConfigurationError(
                    f"subset {ds['name']}/{spec.name}: needs either 'values' "
                    "or both 'train_values' and 'test_values'")
            subsets.append(spec)
        datasets.append(DatasetSpec(ds["name"], subsets))

    config = RunConfig(out, seed, model_section, train_section, percentile, datasets)

    if overrides is not None:
        if getattr(overrides, "out", None):
            config.out = Path(overrides.out)
        if getattr(overrides, "seed", None) is not None:
            config.seed = overrides.seed
        if getattr(overrides, "percentile", None) is not None:
            config.percentile = overrides.percentile
        if getattr(overrides, "model", None):
            config.model_section["kind"] = overrides.model
        if getattr(overrides, "hidden", None):
            config.model_section["hidden"] = [int(h) for h in overrides.hidden.split(",")]
    return config


def select_subsets(config: RunConfig, dataset: str | None, subset: str | None):
    """(dataset, subset) pairs matching the optional name filters."""
    pairs = []
    for ds in config.datasets:
        if dataset is not None and ds.name != dataset:
            continue
        for sub in ds.subsets:
            if subset is not None and sub.name != subset:
                continue
            pairs.append((ds, sub))
    if not pairs:
        raise ConfigurationError(
            f"no subsets match dataset={dataset!r} subset={subset!r}")
    return pairs


# ---------------------------------------------------------------------------
# prepare


def _hash_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _subset_fingerprint(spec: SubsetSpec) -> str:
    payload = spec.fingerprint_dict()
    for key in ("values", "train_values", "test_values", "train_labels",
                "test_labels"):
        p = getattr(spec, key)
        if p is not None:
            if not Path(p).exists():
                raise IngestionError(f"subset {spec.name}: file not found: {p}")
            payload[f"{key}_sha256"] = _hash_file(p)
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()


def subset_dir(config: RunConfig, ds: DatasetSpec, spec: SubsetSpec) -> Path:
    return config.out / ds.name / spec.name


def prepare_subset(config: RunConfig, ds: DatasetSpec, spec: SubsetSpec,
                   log=print) -> dict:
    """Window one subset into the on-disk cache; reuses a current cache."""
    cache = subset_dir(config, ds, spec) / "cache"
    manifest_path = cache / "manifest.json"
    fingerprint = _subset_fingerprint(spec)
    if manifest_path.exists():
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        if manifest.get("fingerprint") == fingerprint:
            log(f"[prepare] {ds.name}/{spec.name}: cache hit")
            return manifest

    common = dict(feature_columns=spec.feature_columns,
                  label_column=spec.label_column,
                  label_columns=spec.label_columns)
    if spec.values is not None:
        record = pl.load_dataset(spec.values, spec.schema, **common)
        train_rec, test_rec = pl.split_series(record, spec.split_fraction)
    else:
        train_rec = pl.load_dataset(spec.train_values, spec.schema,
                                    label_path=spec.train_labels, **common)
        test_rec = pl.load_dataset(spec.test_values, spec.schema,
                                   label_path=spec.test_labels, **common)

    for side, rec in (("train", train_rec), ("test", test_rec)):
        if rec.length < spec.window:
            raise ConfigurationError(
                f"{ds.name}/{spec.name}: {side} split has {rec.length} rows, "
                f"shorter than window {spec.window}")

    scaler = pl.fit_scaler(train_rec)
    train_w = pl.make_windows(pl.apply_scaler(scaler, train_rec),
                              spec.window, spec.stride, source="train")
    test_w = pl.make_windows(pl.apply_scaler(scaler, test_rec),
                             spec.window, spec.stride, source="test")
    n_train_total = len(train_w)
    train_w = pl.drop_anomalous_train_windows(train_w)

    pl.save_window_set(cache / "train.wset", train_w)
    pl.save_window_set(cache / "test.wset", test_w)
    manifest = {
        "fingerprint": fingerprint,
        "window": spec.window,
        "stride": spec.stride,
        "n_features": train_w.n_features,
        "scaler_min": [float(v) for v in scaler.minimum],
        "scaler_max": [float(v) for v in scaler.maximum],
        "counts": {
            "train_windows_total": n_train_total,
            "train_windows_kept": len(train_w),
            "test_windows": len(test_w),
            "test_anomalous_windows": int(test_w.labels.sum()),
        },
    }
    cache.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log(f"[prepare] {ds.name}/{spec.name}: {n_train_total} train windows "
        f"({len(train_w)} kept), {len(test_w)} test windows")
    return manifest


# ---------------------------------------------------------------------------
# train


def build_model(config: RunConfig, kind: str, hidden, input_dim: int):
    if kind == "qae":
        return qae.QaeModel(config.qae_config())
    if kind == "ae":
        return cae.DenseAeModel(config.ae_config(input_dim, hidden))
    raise ConfigurationError(f"unknown model kind: {kind!r}")


def reported_param_count(model) -> int:
    if isinstance(model, qae.QaeModel):
        return qae.count_qae_params(model.config)
    return cae.count_ae_params(model.config)


def train_subset(config: RunConfig, ds: DatasetSpec, spec: SubsetSpec,
                 kind: str, hidden, log=print) -> Path:
    cache = subset_dir(config, ds, spec) / "cache"
    if not (cache / "train.wset").exists():
        raise ConfigurationError(
            f"{ds.name}/{spec.name}: no prepared cache under {cache}; "
            "run `qaead prepare` first")
    train_w = pl.load_window_set(cache / "train.wset")
    model = build_model(config, kind, hidden, train_w.windows.shape[1])
    mdir = subset_dir(config, ds, spec) / model_dir_name(kind, hidden)
    log(f"[train] {ds.name}/{spec.name}/{model_dir_name(kind, hidden)}: "
        f"{len(train_w)} windows, {reported_param_count(model)} reported params")

    history = tr.train_model(model, train_w, config.train_config())
    model.save(mdir / "params.qad")
    history.save_csv(mdir / "history.csv")

    train_scores = model.scores(train_w.windows)
    threshold = ev.compute_threshold(train_scores, config.percentile)
    with open(mdir / "threshold.json", "w") as fh:
        json.dump({"threshold": threshold, "percentile": config.percentile,
                   "n_train_scores": int(train_scores.size)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    log(f"[train] finished after {history.stopped_epoch} epochs "
        f"({history.stop_reason}); threshold {threshold:.6g}")
    return mdir


# ---------------------------------------------------------------------------
# eval


def _load_model(mdir: Path):
    params_path = mdir / "params.qad"
    if not params_path.exists():
        raise ConfigurationError(f"no trained model at {params_path}")
    kind, _, _ = read_container(params_path)
    if kind == qae.PARAMS_KIND:
        params, cfg = qae.load_params(params_path)
        return qae.QaeModel(cfg, params)
    if kind == cae.PARAMS_KIND:
        weights, cfg = cae.load_weights(params_path)
        return cae.DenseAeModel(cfg, weights)
    raise ConfigurationError(f"{params_path}: unknown model kind {kind!r}")


def eval_subset(config: RunConfig, ds: DatasetSpec, spec: SubsetSpec,
                kind: str, hidden, log=print) -> ev.MetricsReport:
    base = subset_dir(config, ds, spec)
    mdir = base / model_dir_name(kind, hidden)
    model = _load_model(mdir)
    with open(mdir / "threshold.json") as fh:
        threshold = float(json.load(fh)["threshold"])

    train_w = pl.load_window_set(base / "cache" / "train.wset")
    test_w = pl.load_window_set(base / "cache" / "test.wset")
    train_scores = model.scores(train_w.windows)
    test_scores = model.scores(test_w.windows)
    preds = ev.classify(test_scores, threshold)
    report = ev.compute_metrics(test_w.labels, preds, test_scores, threshold)
    if report.auc is None:
        log(f"[eval] {ds.name}/{spec.name}: single-class test labels, "
            "AUC undefined")

    payload = {
        "dataset": ds.name,
        "subset": spec.name,
        "model": model_dir_name(kind, hidden),
        "metrics": report.as_dict(),
        "n_train_windows": int(len(train_w)),
        "n_test_windows": int(len(test_w)),
    }
    ev.save_metrics_json(mdir / "report.json", payload)
    ev.save_metrics_csv(mdir / "report.csv",
                        [(ds.name, spec.name, model_dir_name(kind, hidden), report)])

    sets = [
        ev.ScoreSet(train_scores, np.zeros(train_scores.size), "train"),
        ev.ScoreSet(test_scores[test_w.labels == 0],
                    np.zeros(int((test_w.labels == 0).sum())), "test-normal"),
        ev.ScoreSet(test_scores[test_w.labels == 1],
                    np.ones(int((test_w.labels == 1).sum())), "test-anomalous"),
    ]
    summaries = ev.violin_summary(sets, warn=lambda msg: log(f"[eval] {msg}"))
    ev.save_violin_csv(mdir / "violin.csv", summaries)
    log(f"[eval] {ds.name}/{spec.name}/{model_dir_name(kind, hidden)}: "
        f"auc={report.auc if report.auc is not None else 'NA'} "
        f"acc={report.accuracy:.3f}")
    return report


def plot_subset(config: RunConfig, ds: DatasetSpec, spec: SubsetSpec,
                kind: str, hidden, log=print) -> Path:
    mdir = subset_dir(config, ds, spec) / model_dir_name(kind, hidden)
    violin_path = mdir / "violin.csv"
    if not violin_path.exists():
        raise ConfigurationError(f"no violin data at {violin_path}; "
                                 "run `qaead eval` first")
    summaries = ev.load_violin_csv(violin_path)
    title = f"{ds.name}/{spec.name} {model_dir_name(kind, hidden)} scores"
    ev.save_violin_svg(mdir / "violin.svg", summaries, title)
    log(f"[plot] wrote {mdir / 'violin.svg'}")
    return mdir / "violin.svg"


# ---------------------------------------------------------------------------
# benchmark


def benchmark_dataset(config: RunConfig, ds: DatasetSpec, log=print) -> dict:
    """Train and evaluate the model grid over every subset of one dataset."""
    results: dict[str, dict[str, ev.MetricsReport]] = {}
    failures: list[dict] = []
    for spec in ds.subsets:
        try:
            prepare_subset(config, ds, spec, log=log)
        except QaeadError as exc:
            failures.append({"subset": spec.name, "model": None, "error": str(exc)})
            log(f"[benchmark] {ds.name}/{spec.name}: prepare failed: {exc}")
            continue
        for kind, hidden in BENCHMARK_MODELS:
            name = model_dir_name(kind, hidden)
            try:
                train_subset(config, ds, spec, kind, hidden, log=log)
                report = eval_subset(config, ds, spec, kind, hidden, log=log)
                results.setdefault(name, {})[spec.name] = report
            except QaeadError as exc:
                failures.append({"subset": spec.name, "model": name,
                                 "error": str(exc)})
                log(f"[benchmark] {ds.name}/{spec.name}/{name}: failed: {exc}")

    subset_names = [s.name for s in ds.subsets]
    rows = []
    json_models = {}
    for kind, hidden in BENCHMARK_MODELS:
        name = model_dir_name(kind, hidden)
        per_subset = results.get(name, {})
        json_models[name] = {
            sub: report.as_dict() for sub, report in per_subset.items()}
        for metric in ev.MetricsReport.METRIC_FIELDS:
            cells = []
            for sub in subset_names:
                report = per_subset.get(sub)
                value = getattr(report, metric) if report is not None else None
                cells.append(value)
            defined = [v for v in cells if v is not None]
            mean = sum(defined) / len(defined) if defined else None
            rows.append([name, metric]
                        + [ev.format_cell(v) for v in cells] + [ev.format_cell(mean)])

    out = config.out / ds.name
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "benchmark.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "metric"] + subset_names + ["mean"])
        writer.writerows(rows)
    payload = {"dataset": ds.name, "models": json_models, "failures": failures}
    with open(out / "benchmark.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log(f"[benchmark] {ds.name}: wrote {out / 'benchmark.csv'} "
        f"({len(failures)} failures)")
    return payload


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--dataset", help="restrict to one dataset name")
    parser.add_argument("--subset", help="restrict to one subset name")
    parser.add_argument("--model", choices=["qae", "ae"],
                        help="model kind (overrides config)")
    parser.add_argument("--hidden", help="AE hidden sizes, e.g. 16,8")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--percentile", type=float,
                        help="threshold percentile (default 99)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaead",
        description="window-based anomaly detection benchmark: re-upload "
                    "quantum-circuit model vs dense autoencoders")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("prepare", "window raw CSVs into on-disk caches"),
        ("train", "train a model on prepared caches"),
        ("eval", "score test windows and emit metric reports"),
        ("benchmark", "run the full model grid and aggregate a table"),
        ("plot", "render violin SVGs from eval outputs"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
    return parser


def _selected_model(config: RunConfig):
    kind = config.model_section["kind"]
    hidden = tuple(config.model_section["hidden"]) if kind == "ae" else None
    return kind, hidden


def run_command(args: argparse.Namespace, log=print) -> int:
    config = load_run_config(args.config, overrides=args)
    if args.command == "benchmark":
        ran_any = False
        for ds in config.datasets:
            if args.dataset is not None and ds.name != args.dataset:
                continue
            payload = benchmark_dataset(config, ds, log=log)
            ran_any = ran_any or bool(payload["models"])
        if not ran_any:
            raise ConfigurationError("benchmark produced no results")
        return 0

    pairs = select_subsets(config, args.dataset, args.subset)
    kind, hidden = _selected_model(config)
    for ds, spec in pairs:
        if args.command == "prepare":
            prepare_subset(config, ds, spec, log=log)
        elif args.command == "train":
            prepare_subset(config, ds, spec, log=log)
            train_subset(config, ds, spec, kind, hidden, log=log)
        elif args.command == "eval":
            eval_subset(config, ds, spec, kind, hidden, log=log)
        elif args.command == "plot":
            plot_subset(config, ds, spec, kind, hidden, log=log)
    return 0


EXIT_CODES = (
    (ConfigurationError, 2),
    ((IngestionError, InputError), 3),
    ((DatasetError, ContractViolationError), 4),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_command(args)
    except QaeadError as exc:
        for types, code in EXIT_CODES:
            if isinstance(exc, types):
                print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
