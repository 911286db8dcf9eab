"""Bottleneck-activation extraction: hook a layer, run volumes, dump NPY files.

Inputs are preprocessed 3-D volumes stored as .npy; each is resized to a
fixed shape, pushed through the network in eval mode with a forward hook on
the named layer, and the captured 4-axis activation lands as
<sample_id>.npy next to a manifest CSV row. The NPY + manifest formats match
what the scoring toolkit ingests.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .models import MODEL_REGISTRY

SPLITS = ("train", "test")


class ExtractorError(Exception):
    pass


@dataclass(frozen=True)
class ExtractorConfig:
    model_source: str
    layer_name: str
    input_dir: Path
    output_dir: Path
    input_size: tuple[int, int, int] = (256, 128, 128)
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ExtractorError(f"split must be one of {SPLITS}, got {self.split!r}")
        if len(self.input_size) != 3 or any(s < 1 for s in self.input_size):
            raise ExtractorError(f"input_size must be 3 positive ints, got {self.input_size}")


def load_model(source: str) -> nn.Module:
    if source in MODEL_REGISTRY:
        return MODEL_REGISTRY[source]()
    path = Path(source)
    if path.is_file():
        obj = torch.load(path, weights_only=False)
        if not isinstance(obj, nn.Module):
            raise ExtractorError(
                f"{path} does not contain a pickled torch module (got {type(obj).__name__})"
            )
        return obj
    raise ExtractorError(
        f"unknown model source {source!r}: not a registered constructor "
        f"({', '.join(sorted(MODEL_REGISTRY))}) and not a checkpoint path"
    )


def resolve_layer(model: nn.Module, layer_name: str) -> nn.Module:
    try:
        return model.get_submodule(layer_name)
    except AttributeError:
        available = sorted(name for name, _ in model.named_modules() if name)
        raise ExtractorError(
            f"layer {layer_name!r} not found; available layers:\n  "
            + "\n  ".join(available)
        ) from None


def load_volume(path: Path) -> np.ndarray:
    try:
        volume = np.load(path)
    except ValueError as exc:
        raise ExtractorError(f"{path}: not a readable NPY volume: {exc}") from None
    if volume.ndim != 3:
        raise ExtractorError(f"{path}: expected a 3-D volume, got rank {volume.ndim}")
    return np.ascontiguousarray(volume, dtype=np.float32)


def _write_npy_atomic(array: np.ndarray, path: Path) -> None:
    tmp = path.with_suffix(".npy.tmp")
    with open(tmp, "wb") as f:
        np.save(f, array)
    os.replace(tmp, path)


def extract(config: ExtractorConfig) -> list[tuple[str, str, str]]:
    """Run every volume in input_dir through the hooked layer; write NPY + manifest.

    Returns the manifest rows written, in directory (sorted-filename) order.
    Rows are appended if a manifest already exists, so train and test splits
    can be extracted into one output directory. Single-threaded so repeat
    runs are bitwise-identical.
    """
    input_dir = Path(config.input_dir)
    output_dir = Path(config.output_dir)
    volumes = sorted(input_dir.glob("*.npy"))
    if not volumes:
        raise ExtractorError(f"no .npy volumes found in {input_dir}")

    torch.set_num_threads(1)
    model = load_model(config.model_source)
    layer = resolve_layer(model, config.layer_name)
    model.eval()

    captured: dict[str, torch.Tensor] = {}

    def hook(_module, _inputs, output):
        captured["activation"] = output

    handle = layer.register_forward_hook(hook)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = output_dir / "manifest.csv"
    new_manifest = not manifest_path.is_file()

    rows: list[tuple[str, str, str]] = []
    try:
        with torch.no_grad():
            for volume_path in volumes:
                sample_id = volume_path.stem
                volume = torch.from_numpy(load_volume(volume_path))
                resized = torch.nn.functional.interpolate(
                    volume[None, None], size=config.input_size,
                    mode="trilinear", align_corners=False,
                )
                captured.clear()
                model(resized)
                activation = captured.get("activation")
                if not isinstance(activation, torch.Tensor):
                    raise ExtractorError(
                        f"layer {config.layer_name!r} produced "
                        f"{type(activation).__name__}, not a tensor; hook a "
                        "different layer"
                    )
                embedding = activation.squeeze(0)  # drop the batch axis
                if embedding.ndim != 4:
                    raise ExtractorError(
                        f"layer {config.layer_name!r} emits a rank-{embedding.ndim} "
                        "activation after batch squeeze; expected 4 axes "
                        "(hook a different layer)"
                    )
                _write_npy_atomic(embedding.numpy(), output_dir / f"{sample_id}.npy")
                rows.append((sample_id, f"{sample_id}.npy", config.split))
    finally:
        handle.remove()

    with open(manifest_path, "a", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        if new_manifest:
            writer.writerow(["sample_id", "file_path", "split"])
        writer.writerows(rows)
    return rows
