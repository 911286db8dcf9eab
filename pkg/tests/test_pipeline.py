import numpy as np
import pytest

from oodkit.gaussian import EpsilonPolicy
from oodkit.metrics import MetricsTriple
from oodkit.pipeline import (
    DataBundle,
    SweepGrid,
    grid_reducers,
    render_sweep_csv,
    render_sweep_markdown,
    resolve_labels,
    run_experiment,
    run_row,
    run_sweep,
    SweepRow,
    sweep_rows_json,
)
from oodkit.reduction import (
    IdentityReducer,
    PcaReducer,
    TsneConfig,
    TsneReducer,
)
from oodkit.synthetic import SyntheticSpec, generate, write_dataset
from oodkit.tensor_io import ID, OOD, LabelRow, LabelTable


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    spec = SyntheticSpec(latent_dim=4, ambient_shape=(8, 8, 4, 4), n_train=50,
                         n_id_test=20, n_ood_test=20, shift=6.0,
                         noise_sigma=0.05, seed=11)
    ds = generate(spec)
    root = tmp_path_factory.mktemp("synth")
    write_dataset(ds, spec, root)
    return ds, root


def bundle_of(ds):
    ids = [r.sample_id for r in ds.labels.rows]
    labels = {r.sample_id: r.label for r in ds.labels.rows}
    return DataBundle(
        train_tensors=ds.train,
        test_tensors=ds.id_test + ds.ood_test,
        test_ids=ids,
        train_ids=[f"train_{i:04d}" for i in range(len(ds.train))],
        labels_by_id=labels,
        shape=ds.train[0].shape,
    )


def test_resolve_labels_mixes_explicit_and_dsc():
    table = LabelTable((
        LabelRow("a", None, OOD),
        LabelRow("b", 0.97, None),
        LabelRow("c", 0.90, None),
        LabelRow("d", 0.10, ID),  # explicit label wins over dsc
    ))
    out = resolve_labels(table, 0.95)
    assert out == {"a": OOD, "b": ID, "c": OOD, "d": ID}


def test_run_experiment_scores_and_metrics(dataset):
    ds, _ = dataset
    b = bundle_of(ds)
    result = run_experiment(b.train_tensors, b.test_tensors, b.test_ids,
                            b.labels_by_id, PcaReducer(2))
    assert result.metrics.auroc > 0.5
    assert result.scores.shape == (40,)
    assert result.train_features.shape == (50, 2)
    assert result.inversion_seconds > 0
    assert result.label == "PCA(2)"


def test_run_experiment_mean_ood_above_mean_id(dataset):
    ds, _ = dataset
    b = bundle_of(ds)
    result = run_experiment(b.train_tensors, b.test_tensors, b.test_ids,
                            b.labels_by_id, PcaReducer(2))
    ood_scores = [s for s, i in zip(result.scores, b.test_ids) if i.startswith("ood")]
    id_scores = [s for s, i in zip(result.scores, b.test_ids) if i.startswith("id")]
    assert np.mean(ood_scores) > np.mean(id_scores)


def test_grid_has_19_rows_by_default():
    reducers = grid_reducers(SweepGrid())
    assert len(reducers) == 19
    labels = [r.label for r in reducers]
    assert labels[0] == "AveragePool2D(2, 1)"
    assert labels[4] == "AveragePool2D(4, 1)"
    assert labels[5] == "AveragePool3D(2, 1)"
    assert labels[10] == "PCA(2)"
    assert labels[17] == "PCA(256)"
    assert labels[18] == "t-SNE"
    with_baseline = grid_reducers(SweepGrid(include_baseline=True))
    assert len(with_baseline) == 20 and with_baseline[0].label == "Baseline"


def test_run_row_records_error_instead_of_raising(dataset):
    ds, _ = dataset
    b = bundle_of(ds)
    row = run_row(b, PcaReducer(2000))  # out of range for 50 train rows
    assert row.error is not None and "2000" in row.error
    row2 = run_row(b, IdentityReducer(), epsilon_policy=EpsilonPolicy.none())
    assert row2.error is not None  # 50 samples in 1024 dims is singular


def test_run_row_stochastic_aggregates_trials(dataset):
    ds, _ = dataset
    b = bundle_of(ds)
    spec = TsneReducer(TsneConfig(perplexity=8.0, n_iter=60, exaggeration_iters=20))
    row = run_row(b, spec, trials=3, seed=5, timing="fixed")
    assert row.error is None
    assert row.n_trials == 3
    assert row.sd is not None
    assert row.time_mean == 0.0


def test_sweep_serial_matches_parallel(dataset):
    _, root = dataset
    grid = SweepGrid(pool_specs=((2, 2),), pca_components=(2,),
                     include_tsne=False, include_baseline=True)
    kwargs = dict(epsilon_policy=EpsilonPolicy.relative(1e-6), seed=3, timing="fixed")
    rows1 = run_sweep(root / "manifest.csv", root / "labels.csv", grid, jobs=1, **kwargs)
    rows2 = run_sweep(root / "manifest.csv", root / "labels.csv", grid, jobs=2, **kwargs)
    assert rows1 == rows2
    assert [r.label for r in rows1] == ["Baseline", "AveragePool2D(2, 2)",
                                        "AveragePool3D(2, 2)", "PCA(2)"]


def test_render_formats():
    rows = [
        SweepRow("PCA(2)", MetricsTriple(0.9, 0.93, 0.08), None, 0.0001, None, 1),
        SweepRow("t-SNE", MetricsTriple(0.82, 0.87, 0.27),
                 MetricsTriple(0.05, 0.04, 0.14), 0.0003, 0.0003, 10),
        SweepRow("Baseline", error="singular covariance"),
    ]
    csv_text = render_sweep_csv(rows)
    lines = csv_text.strip().split("\n")
    assert lines[0] == "Experiment,AUROC,AUPR,FPR75,ComputationTime"
    assert lines[1] == "PCA(2),0.9000,0.9300,0.0800,0.0001"
    assert "0.8200 (±0.0500)" in lines[2]
    assert "0.0003 (±0.0003)" in lines[2]
    assert lines[3] == "Baseline,ERROR,ERROR,ERROR,ERROR"

    md = render_sweep_markdown(rows)
    md_lines = md.strip().split("\n")
    assert md_lines[0] == "| Experiment | AUROC | AUPR | FPR75 | ComputationTime |"
    # best flags: AUROC max (PCA row), FPR75 min (PCA row), time min (PCA row)
    assert "**0.9000**" in md_lines[2]
    assert "**0.0800**" in md_lines[2]
    assert "**0.0001**" in md_lines[2]
    assert "**0.8200" not in md_lines[3]

    payload = sweep_rows_json(rows)
    assert payload[0]["auroc"] == 0.9
    assert payload[1]["auroc_sd"] == 0.05
    assert payload[2]["error"] == "singular covariance"


def test_explicit_inverse_baseline_worse_than_pca_on_wide_data():
    spec = SyntheticSpec(latent_dim=8, ambient_shape=(64, 4, 4, 4), n_train=120,
                         n_id_test=40, n_ood_test=40, shift=9.0,
                         noise_sigma=0.01, seed=2)
    ds = generate(spec)
    b = bundle_of(ds)
    pca = run_experiment(b.train_tensors, b.test_tensors, b.test_ids,
                         b.labels_by_id, PcaReducer(2), time_inversion=False)
    naive = run_experiment(b.train_tensors, b.test_tensors, b.test_ids,
                           b.labels_by_id, IdentityReducer(),
                           pseudo_inverse=True, time_inversion=False)
    assert naive.gaussian is None
    assert np.mean(naive.scores) > 1e3  # exploded distances off the train span
    assert pca.metrics.auroc > naive.metrics.auroc
