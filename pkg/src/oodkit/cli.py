"""Command-line surface: synth, fit, score, eval, sweep, plot.

Every command reads an optional TOML config (--config); command-line flags
override config values. Exit codes: 0 success, 1 usage/config error, 2 data
error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import pipeline, svgplot, synthetic, tensor_io
from .errors import ConfigError, DataError, OodkitError
from .gaussian import (
    EpsilonPolicy,
    GaussianModel,
    covariance_ellipse,
    fit_gaussian,
    invert_covariance_timed,
    mahalanobis_batch,
)
from .metrics import evaluate, scored_samples
from .reduction import (
    IdentityReducer,
    PcaModel,
    PcaReducer,
    PoolReducer,
    PoolingSpec,
    ReducerSpec,
    TsneConfig,
    TsneReducer,
    apply_pca,
    average_pool,
    reduce_dataset,
    stack_features,
)

FEATURE_CSV_LIMIT = 64  # widest feature matrix worth dumping as CSV by default


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    try:
        with open(p, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: bad TOML: {exc}") from None


def _pick(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _require(value, name: str):
    if value is None:
        raise ConfigError(f"missing required option --{name.replace('_', '-')} "
                          f"(or config key '{name}')")
    return value


def _tsne_config_from(options: dict, seed: int = 0) -> TsneConfig:
    fields = {f.name: f.type for f in dataclasses.fields(TsneConfig)}
    kwargs = {}
    for key, value in options.items():
        if key not in fields:
            raise ConfigError(f"unknown t-SNE option {key!r}")
        kwargs[key] = value
    kwargs.setdefault("seed", seed)
    return TsneConfig(**kwargs)


def reducer_from_flag(text: str) -> ReducerSpec:
    """Parse 'identity', 'pool2d:J,K', 'pool3d:J,K', 'pca:N', or 'tsne[:k=v,...]'."""
    head, _, rest = text.partition(":")
    if head == "identity":
        return IdentityReducer()
    if head in ("pool2d", "pool3d"):
        try:
            j, k = (int(v) for v in rest.split(","))
        except ValueError:
            raise ConfigError(f"bad pooling spec {text!r}; expected {head}:J,K") from None
        return PoolReducer(PoolingSpec(2 if head == "pool2d" else 3, j, k))
    if head == "pca":
        try:
            return PcaReducer(int(rest))
        except ValueError:
            raise ConfigError(f"bad PCA spec {text!r}; expected pca:N") from None
    if head == "tsne":
        options = {}
        if rest:
            for pair in rest.split(","):
                key, _, value = pair.partition("=")
                if not value:
                    raise ConfigError(f"bad t-SNE option {pair!r}; expected key=value")
                options[key] = int(value) if value.lstrip("-").isdigit() else float(value)
        return TsneReducer(_tsne_config_from(options))
    raise ConfigError(f"unknown reducer {text!r}")


def reducer_from_config(section: dict) -> ReducerSpec:
    kind = section.get("type")
    if kind == "identity":
        return IdentityReducer()
    if kind == "pool":
        return PoolReducer(PoolingSpec(
            int(section.get("dims", 2)),
            int(section.get("kernel", 2)),
            int(section.get("stride", 1)),
        ))
    if kind == "pca":
        if "n" not in section:
            raise ConfigError("reducer type 'pca' needs key 'n'")
        return PcaReducer(int(section["n"]))
    if kind == "tsne":
        options = {k: v for k, v in section.items() if k != "type"}
        return TsneReducer(_tsne_config_from(options))
    raise ConfigError(f"unknown reducer type {kind!r} in config")


def _resolve_reducer(ns, config: dict) -> ReducerSpec:
    if getattr(ns, "reducer", None):
        return reducer_from_flag(ns.reducer)
    if "reducer" in config:
        return reducer_from_config(config["reducer"])
    raise ConfigError("no reducer specified (use --reducer or a [reducer] config table)")


def _resolve_epsilon(ns, config: dict) -> EpsilonPolicy:
    if getattr(ns, "epsilon", None):
        return EpsilonPolicy.parse(ns.epsilon)
    section = config.get("epsilon")
    if section:
        return EpsilonPolicy(section.get("policy", "relative"),
                             float(section.get("value", 0.0)))
    return EpsilonPolicy.relative(1e-6)


# ---------------------------------------------------------------------------
# Feature CSV + reducer artifact helpers
# ---------------------------------------------------------------------------

def write_features_csv(path, ids, split, features: np.ndarray) -> None:
    features = np.asarray(features)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "split"] + [f"c{i + 1}" for i in range(features.shape[1])])
        for sample_id, row in zip(ids, features):
            w.writerow([sample_id, split] + [repr(float(v)) for v in row])


def read_features_csv(paths) -> tuple[list[str], list[str], np.ndarray]:
    ids: list[str] = []
    splits: list[str] = []
    rows: list[list[float]] = []
    width = None
    for path in paths:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header or header[:2] != ["sample_id", "split"]:
                raise DataError(f"{path}: expected header sample_id,split,c1,...")
            w = len(header) - 2
            if width is None:
                width = w
            elif w != width:
                raise DataError(f"{path}: feature width {w} does not match {width}")
            for row in reader:
                if not row:
                    continue
                ids.append(row[0])
                splits.append(row[1])
                rows.append([float(v) for v in row[2:]])
    if width is None or not rows:
        raise DataError("no feature rows loaded")
    return ids, splits, np.asarray(rows, dtype=np.float64)


def save_reducer(directory, spec: ReducerSpec, fitted) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if isinstance(spec, IdentityReducer):
        meta = {"type": "identity"}
    elif isinstance(spec, PoolReducer):
        meta = {"type": "pool", "dims": spec.spec.dims,
                "kernel": spec.spec.kernel, "stride": spec.spec.stride}
    elif isinstance(spec, PcaReducer):
        meta = {"type": "pca"}
        fitted.save(directory / "pca")
    elif isinstance(spec, TsneReducer):
        meta = {"type": "tsne", **dataclasses.asdict(spec.config)}
    else:
        raise ConfigError(f"unknown reducer spec {spec!r}")
    (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")


class LoadedReducer:
    """Fitted reducer reloaded from a model directory, able to transform test data."""

    def __init__(self, kind: str, pca: Optional[PcaModel] = None,
                 pool: Optional[PoolingSpec] = None):
        self.kind = kind
        self.pca = pca
        self.pool = pool

    def transform(self, tensors: list[np.ndarray]) -> np.ndarray:
        if self.kind == "identity":
            return stack_features(tensors)
        if self.kind == "pool":
            return stack_features([average_pool(t, self.pool) for t in tensors])
        if self.kind == "pca":
            return apply_pca(self.pca, stack_features(tensors))
        raise ConfigError(
            "t-SNE has no out-of-sample transform; score via the sweep harness "
            "(train and test are embedded jointly there)"
        )


def load_reducer(directory) -> LoadedReducer:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise DataError(f"{directory}: no reducer meta.json")
    meta = json.loads(meta_path.read_text())
    kind = meta.get("type")
    if kind == "identity":
        return LoadedReducer("identity")
    if kind == "pool":
        return LoadedReducer("pool", pool=PoolingSpec(meta["dims"], meta["kernel"], meta["stride"]))
    if kind == "pca":
        return LoadedReducer("pca", pca=PcaModel.load(directory / "pca"))
    if kind == "tsne":
        return LoadedReducer("tsne")
    raise DataError(f"{directory}: unknown reducer type {kind!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(ns) -> int:
    config = load_config(ns.config).get("synth", {})
    shape = ns.shape or config.get("ambient_shape")
    if isinstance(shape, str):
        shape = [int(v) for v in shape.split(",")]
    spec = synthetic.SyntheticSpec(
        latent_dim=int(_pick(ns.latent_dim, config, "latent_dim", 8)),
        ambient_shape=tuple(int(v) for v in _require(shape, "shape")),
        n_train=int(_pick(ns.n_train, config, "n_train", 100)),
        n_id_test=int(_pick(ns.n_id_test, config, "n_id_test", 50)),
        n_ood_test=int(_pick(ns.n_ood_test, config, "n_ood_test", 50)),
        shift=float(_pick(ns.shift, config, "shift", 5.0)),
        noise_sigma=float(_pick(ns.noise_sigma, config, "noise_sigma", 0.0)),
        seed=int(_pick(ns.seed, config, "seed", 0)),
    )
    out = Path(_require(_pick(ns.out, config, "out", None), "out"))
    dataset = synthetic.generate(spec)
    synthetic.write_dataset(dataset, spec, out)
    total = spec.n_train + spec.n_id_test + spec.n_ood_test
    print(f"wrote {total} tensors of shape {spec.ambient_shape} to {out}")
    return 0


def cmd_fit(ns) -> int:
    config = load_config(ns.config)
    manifest_path = _require(_pick(ns.manifest, config, "manifest", None), "manifest")
    out = Path(_require(_pick(ns.out, config, "out", None), "out"))
    spec = _resolve_reducer(ns, config)
    policy = _resolve_epsilon(ns, config)

    manifest = tensor_io.load_manifest(manifest_path)
    train_ids = manifest.ids("train")
    if not train_ids:
        raise DataError(f"{manifest_path}: manifest has no train split")
    train_tensors = manifest.load_split("train")
    d_in = int(np.prod(manifest.shape))

    train_fm, _, fitted = reduce_dataset(train_tensors, [], spec)
    model = fit_gaussian(train_fm, policy)
    _, inverse_seconds = invert_covariance_timed(model)

    out.mkdir(parents=True, exist_ok=True)
    save_reducer(out / "reducer", spec, fitted)
    model.save(out / "gaussian")
    report = {
        "reducer": spec.label,
        "tensor_shape": list(manifest.shape),
        "feature_dim_in": d_in,
        "feature_dim_out": int(train_fm.shape[1]),
        "n_train": len(train_ids),
        "epsilon_policy": policy.describe(),
        "epsilon": model.epsilon,
        "inverse_seconds": round(inverse_seconds, 4),
    }
    (out / "fit_report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    if train_fm.shape[1] <= FEATURE_CSV_LIMIT or ns.save_features:
        write_features_csv(out / "train_features.csv", train_ids, "train", train_fm)
    print(f"fit {spec.label}: {d_in} -> {train_fm.shape[1]} features, "
          f"epsilon {model.epsilon:.3g}, inverse {inverse_seconds:.4f}s")
    return 0


def cmd_score(ns) -> int:
    config = load_config(ns.config)
    manifest_path = _require(_pick(ns.manifest, config, "manifest", None), "manifest")
    model_dir = Path(_require(ns.model, "model"))
    out = Path(_require(_pick(ns.out, config, "out", None), "out"))
    split = ns.split

    reducer = load_reducer(model_dir / "reducer")
    model = GaussianModel.load(model_dir / "gaussian")
    manifest = tensor_io.load_manifest(manifest_path)
    ids = manifest.ids(split)
    if not ids:
        raise DataError(f"{manifest_path}: manifest has no {split} split")
    features = reducer.transform(manifest.load_split(split))
    if features.shape[1] != model.d:
        raise DataError(
            f"reduced feature width {features.shape[1]} does not match the "
            f"fitted model dimension {model.d}"
        )
    scores = mahalanobis_batch(model, features)

    out.mkdir(parents=True, exist_ok=True)
    scores_path = out / "scores.csv"
    with open(scores_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "score", "split"])
        for sample_id, score in zip(ids, scores):
            w.writerow([sample_id, repr(float(score)), split])
    if features.shape[1] <= FEATURE_CSV_LIMIT or ns.save_features:
        write_features_csv(out / f"{split}_features.csv", ids, split, features)
    print(f"scored {len(ids)} {split} samples: mean distance {scores.mean():.4f} "
          f"-> {scores_path}")
    return 0


def _load_scores_csv(path) -> tuple[list[str], list[float], dict[str, str]]:
    ids, values, inline_labels = [], [], {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or "sample_id" not in header or "score" not in header:
            raise DataError(f"{path}: expected columns sample_id and score")
        idx_id = header.index("sample_id")
        idx_score = header.index("score")
        idx_label = header.index("label") if "label" in header else None
        for row in reader:
            if not row:
                continue
            ids.append(row[idx_id])
            try:
                values.append(float(row[idx_score]))
            except ValueError:
                raise DataError(f"{path}: bad score {row[idx_score]!r} "
                                f"for {row[idx_id]!r}") from None
            if idx_label is not None and row[idx_label]:
                inline_labels[row[idx_id]] = row[idx_label]
    if not ids:
        raise DataError(f"{path}: no score rows")
    return ids, values, inline_labels


def cmd_eval(ns) -> int:
    config = load_config(ns.config)
    tpr_target = float(_pick(ns.tpr_target, config, "tpr_target", 0.75))
    threshold = float(_pick(ns.dsc_threshold, config, "dsc_threshold", 0.95))
    ids, values, labels_by_id = _load_scores_csv(_require(ns.scores, "scores"))
    labels_path = _pick(ns.labels, config, "labels", None)
    if labels_path:
        labels_by_id = pipeline.resolve_labels(tensor_io.load_labels(labels_path), threshold)
    samples = scored_samples(ids, values, labels_by_id)
    triple = evaluate(samples, tpr_target)
    n_ood = sum(1 for s in samples if s.label == tensor_io.OOD)
    payload = {
        "auroc": triple.auroc,
        "aupr": triple.aupr,
        "fpr75": triple.fpr_at_tpr,
        "tpr_target": triple.tpr_target,
        "n_id": len(samples) - n_ood,
        "n_ood": n_ood,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if ns.out:
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text + "\n")
    return 0


def cmd_sweep(ns) -> int:
    config = load_config(ns.config)
    manifest_path = _require(_pick(ns.manifest, config, "manifest", None), "manifest")
    labels_path = _require(_pick(ns.labels, config, "labels", None), "labels")
    out = Path(_require(_pick(ns.out, config, "out", None), "out"))
    seed = int(_pick(ns.seed, config, "seed", 0))
    jobs = int(_pick(ns.jobs, config, "jobs", 1))
    tpr_target = float(_pick(ns.tpr_target, config, "tpr_target", 0.75))
    threshold = float(_pick(ns.dsc_threshold, config, "dsc_threshold", 0.95))
    policy = _resolve_epsilon(ns, config)

    section = config.get("sweep", {})
    grid = pipeline.SweepGrid(
        pool_specs=tuple(tuple(int(v) for v in pair)
                         for pair in section.get("pool_specs", pipeline.DEFAULT_POOL_SPECS)),
        pca_components=tuple(int(v) for v in
                             section.get("pca_components", pipeline.DEFAULT_PCA_COMPONENTS)),
        include_tsne=bool(section.get("include_tsne", True)),
        tsne_trials=int(_pick(ns.trials, section, "tsne_trials", 10)),
        include_baseline=bool(ns.include_baseline or section.get("include_baseline", False)),
    )
    tsne_config = _tsne_config_from(config.get("tsne", {}), seed=seed)

    rows = pipeline.run_sweep(
        manifest_path, labels_path, grid,
        epsilon_policy=policy, tpr_target=tpr_target, seed=seed, jobs=jobs,
        timing=ns.timing, pseudo_baseline=ns.pseudo_inverse,
        tsne_config=tsne_config, dsc_threshold=threshold,
    )
    out.mkdir(parents=True, exist_ok=True)
    csv_text = pipeline.render_sweep_csv(rows)
    md_text = pipeline.render_sweep_markdown(rows)
    (out / "sweep.csv").write_text(csv_text)
    (out / "sweep.md").write_text(md_text)
    (out / "results.json").write_text(
        json.dumps(pipeline.sweep_rows_json(rows), sort_keys=True, indent=2) + "\n"
    )
    failures = [r for r in rows if r.error]
    for r in failures:
        print(f"row {r.label}: {r.error}", file=sys.stderr)
    print(md_text, end="")
    return 0


def cmd_plot(ns) -> int:
    config = load_config(ns.config)
    model_dir = Path(_require(ns.model, "model"))
    out = Path(_require(_pick(ns.out, config, "out", None), "out"))
    threshold = float(_pick(ns.dsc_threshold, config, "dsc_threshold", 0.95))

    model = GaussianModel.load(model_dir / "gaussian")
    if model.d != 2:
        raise ConfigError(
            f"plotting needs 2-D features, model has d={model.d}; "
            "fit with a 2-component reducer such as PCA(2)"
        )
    ids, splits, features = read_features_csv(ns.features)
    if features.shape[1] != 2:
        raise ConfigError(
            f"plotting needs exactly 2 feature columns, got {features.shape[1]}; "
            "reduce with PCA(2) first"
        )
    labels_path = _pick(ns.labels, config, "labels", None)
    labels_by_id = (pipeline.resolve_labels(tensor_io.load_labels(labels_path), threshold)
                    if labels_path else {})
    tags = {}
    if ns.tags:
        with open(ns.tags, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            next(reader, None)
            for row in reader:
                if len(row) >= 2:
                    tags[row[0]] = row[1]

    groups: dict[str, list[int]] = {}
    point_labels = []
    for i, (sample_id, split) in enumerate(zip(ids, splits)):
        label = labels_by_id.get(sample_id, "")
        point_labels.append(label)
        if split == "train":
            key = f"train:{tags[sample_id]}" if sample_id in tags else "train"
        elif label == tensor_io.OOD:
            key = "test OOD"
        elif label == tensor_io.ID:
            key = "test ID"
        else:
            key = "test"
        groups.setdefault(key, []).append(i)

    def color_for(key: str, index: int) -> str:
        if key.startswith("train:"):
            return svgplot.TAG_COLORS[index % len(svgplot.TAG_COLORS)]
        return {"train": svgplot.PALETTE["train"],
                "test ID": svgplot.PALETTE["id"],
                "test OOD": svgplot.PALETTE["ood"]}.get(key, "#7f7f7f")

    series = [
        svgplot.Series(key, features[idx_list], color_for(key, i))
        for i, (key, idx_list) in enumerate(groups.items())
    ]
    ellipses = [covariance_ellipse(model, 1.0), covariance_ellipse(model, 2.0)]

    timestamp = None if ns.no_timestamp else datetime.now(timezone.utc).isoformat()
    svg = svgplot.render_scatter(series, ellipses, title=ns.title, timestamp=timestamp)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scatter.svg").write_text(svg)
    with open(out / "points.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "comp1", "comp2", "split", "label"])
        for sample_id, split, label, row in zip(ids, splits, point_labels, features):
            w.writerow([sample_id, repr(float(row[0])), repr(float(row[1])), split, label])

    distances = mahalanobis_batch(model, features)
    for split in sorted(set(splits)):
        mask = np.array([s == split for s in splits])
        inside = int((distances[mask] <= 1.0).sum())
        total = int(mask.sum())
        print(f"{split}: {inside}/{total} inside the 1-SD ellipse "
              f"({100.0 * inside / total:.1f}%)")
    print(f"wrote {out / 'scatter.svg'} and {out / 'points.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oodkit",
                     description="Embedding-space OOD detection via Mahalanobis distance")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="TOML config file; flags override its values")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic embedding dataset")
    shared(p)
    p.add_argument("--latent-dim", type=int, dest="latent_dim", default=None)
    p.add_argument("--shape", default=None, help="ambient shape C,D,H,W")
    p.add_argument("--n-train", type=int, dest="n_train", default=None)
    p.add_argument("--n-id-test", type=int, dest="n_id_test", default=None)
    p.add_argument("--n-ood-test", type=int, dest="n_ood_test", default=None)
    p.add_argument("--shift", type=float, default=None)
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a reducer and Gaussian on the train split")
    shared(p)
    p.add_argument("--manifest", default=None)
    p.add_argument("--reducer", default=None,
                   help="identity | pool2d:J,K | pool3d:J,K | pca:N | tsne[:k=v,...]")
    p.add_argument("--epsilon", default=None, help="none | absolute:EPS | relative:RHO")
    p.add_argument("--save-features", action="store_true", dest="save_features")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score a split against a fitted model")
    shared(p)
    p.add_argument("--manifest", default=None)
    p.add_argument("--model", default=None, help="directory written by fit")
    p.add_argument("--split", choices=tensor_io.SPLITS, default="test")
    p.add_argument("--save-features", action="store_true", dest="save_features")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="compute AUROC/AUPR/FPR@TPR from scores + labels")
    shared(p)
    p.add_argument("--scores", default=None, help="scores CSV from the score command")
    p.add_argument("--labels", default=None, help="label CSV (sample_id,dsc,label)")
    p.add_argument("--tpr-target", type=float, dest="tpr_target", default=None)
    p.add_argument("--dsc-threshold", type=float, dest="dsc_threshold", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run the reducer hyperparameter grid")
    shared(p)
    p.add_argument("--manifest", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--epsilon", default=None)
    p.add_argument("--tpr-target", type=float, dest="tpr_target", default=None)
    p.add_argument("--dsc-threshold", type=float, dest="dsc_threshold", default=None)
    p.add_argument("--trials", type=int, default=None,
                   help="seeded trials for stochastic reducers (default 10)")
    p.add_argument("--include-baseline", action="store_true", dest="include_baseline")
    p.add_argument("--pseudo-inverse", action="store_true", dest="pseudo_inverse",
                   help="emulate the unregularized explicit-inverse baseline")
    p.add_argument("--timing", choices=("wall", "fixed"), default="wall",
                   help="'fixed' writes 0.0000 timings for byte-reproducible tables")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="scatter 2-D features with covariance ellipses")
    shared(p)
    p.add_argument("--model", default=None, help="directory written by fit")
    p.add_argument("--features", action="append", default=None, required=True,
                   help="features CSV (repeatable: train + test)")
    p.add_argument("--labels", default=None)
    p.add_argument("--tags", default=None, help="optional CSV sample_id,tag for train coloring")
    p.add_argument("--title", default=None)
    p.add_argument("--dsc-threshold", type=float, dest="dsc_threshold", default=None)
    p.add_argument("--no-timestamp", action="store_true", dest="no_timestamp")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns) or 0
    except OodkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
