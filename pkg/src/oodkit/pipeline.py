"""End-to-end experiment runner and the sweep harness.

One experiment = reduce train/test, fit the Gaussian on train features,
score the test split by Mahalanobis distance, evaluate AUROC/AUPR/FPR@TPR.
The sweep harness runs a grid of reducer configurations, aggregates
stochastic reducers over seeded trials, and renders the results as CSV and
Markdown tables with per-column best-value flags.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import OodkitError
from .gaussian import (
    DEFAULT_EPSILON,
    EpsilonPolicy,
    GaussianModel,
    fit_gaussian,
    invert_covariance_timed,
    mahalanobis_batch,
    explicit_inverse_scores,
)
from .metrics import (
    MetricsTriple,
    TrialSummary,
    aggregate_trials,
    evaluate,
    scored_samples,
)
from .reduction import (
    FittedReducer,
    IdentityReducer,
    PcaReducer,
    PoolReducer,
    PoolingSpec,
    ReducerSpec,
    TsneConfig,
    TsneReducer,
    reduce_dataset,
    with_seed,
)
from .tensor_io import ID, OOD, LabelTable, load_labels, load_manifest


def resolve_labels(table: LabelTable, threshold: float = 0.95) -> dict[str, str]:
    """sample_id -> ID/OOD; rows without an explicit label fall back to the DSC rule."""
    out: dict[str, str] = {}
    for r in table.rows:
        if r.label is not None:
            out[r.sample_id] = r.label
        elif r.dsc is not None:
            out[r.sample_id] = ID if r.dsc >= threshold else OOD
    return out


@dataclass(frozen=True)
class ExperimentResult:
    label: str
    metrics: MetricsTriple
    inversion_seconds: Optional[float]
    scores: np.ndarray
    test_ids: list[str]
    train_features: np.ndarray
    test_features: np.ndarray
    gaussian: Optional[GaussianModel]
    fitted: FittedReducer


def run_experiment(
    train_tensors: list[np.ndarray],
    test_tensors: list[np.ndarray],
    test_ids: list[str],
    labels_by_id: dict[str, str],
    spec: ReducerSpec,
    *,
    epsilon_policy: EpsilonPolicy = DEFAULT_EPSILON,
    tpr_target: float = 0.75,
    pseudo_inverse: bool = False,
    time_inversion: bool = True,
) -> ExperimentResult:
    """Run one reduce -> fit -> score -> evaluate pass.

    ``pseudo_inverse`` replaces the factorized scoring path with the explicit
    Moore-Penrose-inverse emulation of the unregularized baseline.
    """
    train_fm, test_fm, fitted = reduce_dataset(train_tensors, test_tensors, spec)
    if pseudo_inverse:
        scores, inv_seconds = explicit_inverse_scores(train_fm, test_fm)
        model = None
        if not time_inversion:
            inv_seconds = None
    else:
        model = fit_gaussian(train_fm, epsilon_policy)
        inv_seconds = None
        if time_inversion:
            _, inv_seconds = invert_covariance_timed(model)
        scores = mahalanobis_batch(model, test_fm)
    samples = scored_samples(test_ids, scores, labels_by_id)
    triple = evaluate(samples, tpr_target)
    return ExperimentResult(
        label=spec.label,
        metrics=triple,
        inversion_seconds=inv_seconds,
        scores=scores,
        test_ids=list(test_ids),
        train_features=train_fm,
        test_features=test_fm,
        gaussian=model,
        fitted=fitted,
    )


# ---------------------------------------------------------------------------
# Sweep harness
# ---------------------------------------------------------------------------

DEFAULT_POOL_SPECS: tuple[tuple[int, int], ...] = ((2, 1), (2, 2), (3, 1), (3, 2), (4, 1))
DEFAULT_PCA_COMPONENTS: tuple[int, ...] = (2, 4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class SweepGrid:
    pool_specs: tuple[tuple[int, int], ...] = DEFAULT_POOL_SPECS
    pca_components: tuple[int, ...] = DEFAULT_PCA_COMPONENTS
    include_tsne: bool = True
    tsne_trials: int = 10
    include_baseline: bool = False

    def __post_init__(self):
        from .errors import ConfigError

        if self.tsne_trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.tsne_trials}")


def grid_reducers(grid: SweepGrid, tsne_config: TsneConfig = TsneConfig()) -> list[ReducerSpec]:
    """Reducer list in deterministic table order: baseline, 2D pools, 3D pools, PCA, t-SNE."""
    reducers: list[ReducerSpec] = []
    if grid.include_baseline:
        reducers.append(IdentityReducer())
    for dims in (2, 3):
        for j, k in grid.pool_specs:
            reducers.append(PoolReducer(PoolingSpec(dims, j, k)))
    for n in grid.pca_components:
        reducers.append(PcaReducer(int(n)))
    if grid.include_tsne:
        reducers.append(TsneReducer(tsne_config))
    return reducers


@dataclass(frozen=True)
class SweepRow:
    label: str
    mean: Optional[MetricsTriple] = None
    sd: Optional[MetricsTriple] = None
    time_mean: Optional[float] = None
    time_sd: Optional[float] = None
    n_trials: int = 1
    error: Optional[str] = None


@dataclass(frozen=True)
class DataBundle:
    train_tensors: list[np.ndarray]
    test_tensors: list[np.ndarray]
    test_ids: list[str]
    train_ids: list[str]
    labels_by_id: dict[str, str]
    shape: tuple[int, ...]


@lru_cache(maxsize=2)
def _load_bundle_cached(manifest_path: str, labels_path: str, threshold: float) -> DataBundle:
    manifest = load_manifest(manifest_path)
    labels = resolve_labels(load_labels(labels_path), threshold)
    return DataBundle(
        train_tensors=manifest.load_split("train"),
        test_tensors=manifest.load_split("test"),
        test_ids=manifest.ids("test"),
        train_ids=manifest.ids("train"),
        labels_by_id=labels,
        shape=manifest.shape,
    )


def load_bundle(manifest_path, labels_path, threshold: float = 0.95) -> DataBundle:
    return _load_bundle_cached(str(manifest_path), str(labels_path), float(threshold))


def run_row(
    bundle: DataBundle,
    spec: ReducerSpec,
    *,
    epsilon_policy: EpsilonPolicy = DEFAULT_EPSILON,
    tpr_target: float = 0.75,
    trials: int = 10,
    seed: int = 0,
    timing: str = "wall",
    pseudo_baseline: bool = False,
) -> SweepRow:
    """Run one grid row; configuration failures land in the row, not the caller."""
    time_inversion = timing == "wall"
    n_trials = trials if spec.stochastic else 1
    try:
        triples, times = [], []
        for t in range(n_trials):
            result = run_experiment(
                bundle.train_tensors,
                bundle.test_tensors,
                bundle.test_ids,
                bundle.labels_by_id,
                with_seed(spec, seed + t) if spec.stochastic else spec,
                epsilon_policy=epsilon_policy,
                tpr_target=tpr_target,
                pseudo_inverse=pseudo_baseline and isinstance(spec, IdentityReducer),
                time_inversion=time_inversion,
            )
            triples.append(result.metrics)
            times.append(result.inversion_seconds if time_inversion else 0.0)
    except (OodkitError, np.linalg.LinAlgError, MemoryError) as exc:
        return SweepRow(label=spec.label, n_trials=n_trials, error=str(exc))
    summary: TrialSummary = aggregate_trials(triples)
    times_arr = np.asarray(times, dtype=np.float64)
    return SweepRow(
        label=spec.label,
        mean=summary.mean,
        sd=summary.sd if spec.stochastic else None,
        time_mean=float(times_arr.mean()),
        time_sd=float(times_arr.std()) if spec.stochastic else None,
        n_trials=n_trials,
    )


def _row_task(args) -> SweepRow:
    (manifest_path, labels_path, threshold, spec, policy, tpr_target,
     trials, seed, timing, pseudo) = args
    bundle = load_bundle(manifest_path, labels_path, threshold)
    return run_row(
        bundle, spec,
        epsilon_policy=policy, tpr_target=tpr_target, trials=trials,
        seed=seed, timing=timing, pseudo_baseline=pseudo,
    )


def run_sweep(
    manifest_path,
    labels_path,
    grid: SweepGrid,
    *,
    epsilon_policy: EpsilonPolicy = DEFAULT_EPSILON,
    tpr_target: float = 0.75,
    seed: int = 0,
    jobs: int = 1,
    timing: str = "wall",
    pseudo_baseline: bool = False,
    tsne_config: TsneConfig = TsneConfig(),
    dsc_threshold: float = 0.95,
) -> list[SweepRow]:
    """Run the whole grid; rows come back in grid order regardless of jobs."""
    reducers = grid_reducers(grid, tsne_config)
    if jobs <= 1:
        bundle = load_bundle(manifest_path, labels_path, dsc_threshold)
        return [
            run_row(
                bundle, spec,
                epsilon_policy=epsilon_policy, tpr_target=tpr_target,
                trials=grid.tsne_trials, seed=seed, timing=timing,
                pseudo_baseline=pseudo_baseline,
            )
            for spec in reducers
        ]
    # validate inputs once in the parent so a broken dataset aborts up front
    load_bundle(manifest_path, labels_path, dsc_threshold)
    tasks = [
        (str(manifest_path), str(labels_path), dsc_threshold, spec, epsilon_policy,
         tpr_target, grid.tsne_trials, seed, timing, pseudo_baseline)
        for spec in reducers
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_row_task, tasks))


# ---------------------------------------------------------------------------
# Table rendering
# ---------------------------------------------------------------------------

_COLUMNS = ("Experiment", "AUROC", "AUPR", "FPR75", "ComputationTime")
_ERROR_CELL = "ERROR"


def _cell(value: Optional[float], sd: Optional[float], decimals: int) -> str:
    if value is None:
        return _ERROR_CELL
    text = f"{value:.{decimals}f}"
    if sd is not None:
        text += f" (±{sd:.{decimals}f})"
    return text


def _row_cells(row: SweepRow) -> list[str]:
    if row.error is not None:
        return [row.label, _ERROR_CELL, _ERROR_CELL, _ERROR_CELL, _ERROR_CELL]
    return [
        row.label,
        _cell(row.mean.auroc, row.sd.auroc if row.sd else None, 4),
        _cell(row.mean.aupr, row.sd.aupr if row.sd else None, 4),
        _cell(row.mean.fpr_at_tpr, row.sd.fpr_at_tpr if row.sd else None, 4),
        _cell(row.time_mean, row.time_sd, 4),
    ]


def _best_flags(rows: list[SweepRow]) -> list[list[bool]]:
    """Which cells to bold: AUROC/AUPR max, FPR75/ComputationTime min, by mean."""
    ok = [r for r in rows if r.error is None]
    flags = [[False] * 5 for _ in rows]
    if not ok:
        return flags
    getters = [
        (lambda r: r.mean.auroc, max),
        (lambda r: r.mean.aupr, max),
        (lambda r: r.mean.fpr_at_tpr, min),
        (lambda r: r.time_mean, min),
    ]
    for col, (get, pick) in enumerate(getters, start=1):
        best = pick(get(r) for r in ok)
        for i, r in enumerate(rows):
            if r.error is None and get(r) == best:
                flags[i][col] = True
    return flags


def render_sweep_csv(rows: list[SweepRow]) -> str:
    lines = [",".join(_COLUMNS)]
    for row in rows:
        cells = _row_cells(row)
        lines.append(",".join(f'"{c}"' if "," in c else c for c in cells))
    return "\n".join(lines) + "\n"


def render_sweep_markdown(rows: list[SweepRow]) -> str:
    flags = _best_flags(rows)
    lines = [
        "| " + " | ".join(_COLUMNS) + " |",
        "|" + "---|" * len(_COLUMNS),
    ]
    for row, row_flags in zip(rows, flags):
        cells = _row_cells(row)
        cells = [f"**{c}**" if f else c for c, f in zip(cells, row_flags)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def sweep_rows_json(rows: list[SweepRow]) -> list[dict]:
    out = []
    for r in rows:
        entry: dict = {"experiment": r.label, "n_trials": r.n_trials, "error": r.error}
        if r.error is None:
            entry.update(
                auroc=r.mean.auroc,
                aupr=r.mean.aupr,
                fpr75=r.mean.fpr_at_tpr,
                tpr_target=r.mean.tpr_target,
                time_seconds=r.time_mean,
            )
            if r.sd is not None:
                entry.update(
                    auroc_sd=r.sd.auroc,
                    aupr_sd=r.sd.aupr,
                    fpr75_sd=r.sd.fpr_at_tpr,
                    time_seconds_sd=r.time_sd,
                )
        out.append(entry)
    return out
