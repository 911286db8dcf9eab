"""Acceptance: extractor output feeds the scoring toolkit end to end.

The toolkit is driven through its installed CLI (`python -m oodkit`), i.e.
purely through the NPY + manifest + CSV surfaces the two packages share.
"""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from extractor.cli import main as extract_main


def _primary_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "oodkit", *args],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("roundtrip")
    rng = np.random.default_rng(42)
    for split, count in (("train", 4), ("test", 3)):
        vol_dir = root / f"{split}_volumes"
        vol_dir.mkdir()
        for i in range(count):
            volume = rng.standard_normal((64, 48, 48)).astype(np.float32)
            np.save(vol_dir / f"{split}_{i:02d}.npy", volume)
    return root


def test_criterion_11_extractor_round_trip(workspace):
    emb = workspace / "embeddings"
    for split in ("train", "test"):
        rc = extract_main([
            "--model", "toy_encoder_decoder", "--layer", "bottleneck",
            "--in", str(workspace / f"{split}_volumes"), "--out", str(emb),
            "--split", split, "--size", "256,128,128",
        ])
        assert rc == 0

    # exact canonical embedding shape from the (256, 128, 128) input
    sample = np.load(emb / "train_00.npy")
    assert sample.shape == (768, 8, 4, 4)
    assert np.isfinite(sample).all()
    with open(emb / "manifest.csv") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 1 + 4 + 3

    # rerunning the extractor reproduces the payload bitwise
    rerun = workspace / "embeddings_rerun"
    rc = extract_main([
        "--model", "toy_encoder_decoder", "--layer", "bottleneck",
        "--in", str(workspace / "train_volumes"), "--out", str(rerun),
        "--split", "train", "--size", "256,128,128",
    ])
    assert rc == 0
    for i in range(4):
        name = f"train_{i:02d}.npy"
        assert (emb / name).read_bytes() == (rerun / name).read_bytes()

    # the scoring toolkit fits, scores, and plots these files without error
    fit_dir = workspace / "fit"
    proc = _primary_cli("fit", "--manifest", str(emb / "manifest.csv"),
                        "--reducer", "pca:2", "--out", str(fit_dir))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((fit_dir / "fit_report.json").read_text())
    assert report["feature_dim_in"] == 768 * 8 * 4 * 4

    score_dir = workspace / "scores"
    proc = _primary_cli("score", "--manifest", str(emb / "manifest.csv"),
                        "--model", str(fit_dir), "--out", str(score_dir))
    assert proc.returncode == 0, proc.stderr
    with open(score_dir / "scores.csv") as f:
        score_rows = list(csv.reader(f))[1:]
    assert len(score_rows) == 3
    assert all(np.isfinite(float(r[1])) for r in score_rows)

    plot_dir = workspace / "plots"
    proc = _primary_cli("plot", "--model", str(fit_dir),
                        "--features", str(fit_dir / "train_features.csv"),
                        "--features", str(score_dir / "test_features.csv"),
                        "--out", str(plot_dir), "--no-timestamp")
    assert proc.returncode == 0, proc.stderr
    assert (plot_dir / "scatter.svg").is_file()
    assert (plot_dir / "points.csv").is_file()
    print("[PASS] criterion 11: extractor -> fit/score/plot round trip, "
          "bitwise-identical rerun")
