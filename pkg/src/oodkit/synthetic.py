"""Synthetic embedding datasets with known ID/OOD structure.

Latent Gaussian points are pushed into the ambient tensor space through a
seeded random linear map with orthonormal columns, so latent geometry (and
therefore every analytic oracle) survives the embedding exactly. The OOD
split is the same latent Gaussian displaced by `shift` along a fixed random
unit direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .tensor_io import (
    ID,
    OOD,
    LabelRow,
    LabelTable,
    make_label_table,
    save_labels,
    write_array,
    write_manifest,
)


@dataclass(frozen=True)
class SyntheticSpec:
    latent_dim: int
    ambient_shape: tuple[int, int, int, int]
    n_train: int
    n_id_test: int
    n_ood_test: int
    shift: float
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.ambient_shape) != 4 or any(s < 1 for s in self.ambient_shape):
            raise ConfigError(f"ambient_shape must be 4 positive ints, got {self.ambient_shape}")
        if self.latent_dim < 1 or self.latent_dim > int(np.prod(self.ambient_shape)):
            raise ConfigError(
                f"latent_dim {self.latent_dim} must be in [1, prod(ambient_shape)]"
            )
        for name in ("n_train", "n_id_test", "n_ood_test"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.shift < 0:
            raise ConfigError(f"shift must be non-negative, got {self.shift}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be non-negative, got {self.noise_sigma}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class SyntheticDataset:
    train: list[np.ndarray]
    id_test: list[np.ndarray]
    ood_test: list[np.ndarray]
    labels: LabelTable


def _orthonormal_map(rng: np.random.Generator, ambient_dim: int, latent_dim: int) -> np.ndarray:
    """QR of a seeded Gaussian matrix, sign-fixed for determinism."""
    q, r = np.linalg.qr(rng.standard_normal((ambient_dim, latent_dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Deterministic dataset draw for the given spec (counter-based Philox RNG)."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    ambient_dim = int(np.prod(spec.ambient_shape))

    basis = _orthonormal_map(rng, ambient_dim, spec.latent_dim)
    u = rng.standard_normal(spec.latent_dim)
    u /= np.linalg.norm(u)

    latents = {
        "train": rng.standard_normal((spec.n_train, spec.latent_dim)),
        "id": rng.standard_normal((spec.n_id_test, spec.latent_dim)),
        "ood": rng.standard_normal((spec.n_ood_test, spec.latent_dim)) + spec.shift * u,
    }

    def to_tensors(z: np.ndarray) -> list[np.ndarray]:
        ambient = z @ basis.T
        if spec.noise_sigma > 0:
            ambient = ambient + spec.noise_sigma * rng.standard_normal(ambient.shape)
        return [row.reshape(spec.ambient_shape) for row in ambient]

    train = to_tensors(latents["train"])
    id_test = to_tensors(latents["id"])
    ood_test = to_tensors(latents["ood"])

    rows = [LabelRow(f"id_{i:04d}", None, ID) for i in range(spec.n_id_test)]
    rows += [LabelRow(f"ood_{i:04d}", None, OOD) for i in range(spec.n_ood_test)]
    return SyntheticDataset(train, id_test, ood_test, make_label_table(rows))


def dataset_ids(spec: SyntheticSpec) -> dict[str, list[str]]:
    return {
        "train": [f"train_{i:04d}" for i in range(spec.n_train)],
        "id": [f"id_{i:04d}" for i in range(spec.n_id_test)],
        "ood": [f"ood_{i:04d}" for i in range(spec.n_ood_test)],
    }


def write_dataset(dataset: SyntheticDataset, spec: SyntheticSpec, out_dir) -> Path:
    """Write the dataset in the ingestion layout: NPY files + manifest + labels."""
    out_dir = Path(out_dir)
    emb_dir = out_dir / "embeddings"
    emb_dir.mkdir(parents=True, exist_ok=True)
    ids = dataset_ids(spec)
    manifest_rows = []
    for group, tensors, split in (
        ("train", dataset.train, "train"),
        ("id", dataset.id_test, "test"),
        ("ood", dataset.ood_test, "test"),
    ):
        for sample_id, tensor in zip(ids[group], tensors):
            rel = f"embeddings/{sample_id}.npy"
            write_array(tensor, out_dir / rel)
            manifest_rows.append((sample_id, rel, split))
    write_manifest(manifest_rows, out_dir / "manifest.csv")
    save_labels(dataset.labels, out_dir / "labels.csv")
    return out_dir


def oracle_auroc_one_dim(shift: float) -> float:
    """AUROC of two unit-variance Gaussians with mean gap `shift`.

    Phi(shift / sqrt(2)): the probability that a draw from the shifted
    distribution exceeds one from the base distribution.
    """
    if shift < 0:
        raise ConfigError(f"shift must be non-negative, got {shift}")
    return 0.5 * (1.0 + math.erf(shift / 2.0))
