"""Embedding tensor I/O: a strict NPY codec, dataset manifests, and labels.

Embeddings travel between tools as NPY files. The codec here accepts only
what the rest of the pipeline can handle without silent surprises:
little-endian float32/float64, C-order, NPY versions 1.0/2.0 on read and
1.0 on write. Everything is widened to float64 on load because covariance
inversion downstream is conditioning-sensitive.
"""

from __future__ import annotations

import ast
import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError

ID = "ID"
OOD = "OOD"
SPLITS = ("train", "test")

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCRS = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


# ---------------------------------------------------------------------------
# NPY codec
# ---------------------------------------------------------------------------

def _parse_npy_header(f, path: Path):
    """Parse an open NPY stream up to the payload. Returns (shape, dtype, offset)."""
    magic = f.read(6)
    if magic != _MAGIC:
        raise DataError(f"{path}: not an NPY file (bad magic at byte 0)")
    version = f.read(2)
    if len(version) < 2:
        raise DataError(f"{path}: truncated version field at byte 6")
    major, minor = version[0], version[1]
    if (major, minor) not in {(1, 0), (2, 0)}:
        raise DataError(
            f"{path}: unsupported NPY version {major}.{minor} at byte 6 "
            "(only 1.0 and 2.0 are accepted)"
        )
    if major == 1:
        raw = f.read(2)
        if len(raw) < 2:
            raise DataError(f"{path}: truncated header length at byte 8")
        (header_len,) = struct.unpack("<H", raw)
        header_start = 10
    else:
        raw = f.read(4)
        if len(raw) < 4:
            raise DataError(f"{path}: truncated header length at byte 8")
        (header_len,) = struct.unpack("<I", raw)
        header_start = 12
    header_bytes = f.read(header_len)
    if len(header_bytes) < header_len:
        raise DataError(f"{path}: truncated header at byte {header_start}")
    try:
        header = ast.literal_eval(header_bytes.decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise DataError(
            f"{path}: malformed header dict at byte {header_start}: {exc}"
        ) from None
    if not isinstance(header, dict) or not {"descr", "fortran_order", "shape"} <= set(header):
        raise DataError(
            f"{path}: header at byte {header_start} lacks descr/fortran_order/shape"
        )
    descr = header["descr"]
    if descr not in _SUPPORTED_DESCRS:
        raise DataError(
            f"{path}: unsupported dtype descr {descr!r} "
            "(only little-endian '<f4'/'<f8' are accepted)"
        )
    if header["fortran_order"] is not False:
        raise DataError(f"{path}: fortran_order must be False (C-order payloads only)")
    shape = header["shape"]
    if not (
        isinstance(shape, tuple)
        and all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise DataError(f"{path}: header shape {shape!r} is not a tuple of ints")
    return shape, _SUPPORTED_DESCRS[descr], header_start + header_len


def read_npy_header(path) -> tuple[tuple[int, ...], np.dtype]:
    """Read only the shape and dtype of an NPY file (payload untouched)."""
    path = Path(path)
    with open(path, "rb") as f:
        shape, dtype, _ = _parse_npy_header(f, path)
    return shape, dtype


def read_npy(path) -> np.ndarray:
    """Read an NPY file of any rank into a float64 C-order array."""
    path = Path(path)
    with open(path, "rb") as f:
        shape, dtype, offset = _parse_npy_header(f, path)
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = np.fromfile(f, dtype=dtype, count=count)
        if data.size < count:
            raise DataError(
                f"{path}: payload holds {data.size} of {count} expected values "
                f"(payload starts at byte {offset})"
            )
        if f.read(1):
            raise DataError(f"{path}: trailing bytes after payload at byte "
                            f"{offset + count * dtype.itemsize}")
    return data.astype(np.float64, copy=False).reshape(shape)


def write_npy(array: np.ndarray, path) -> None:
    """Write an array as NPY v1.0, float64 little-endian, C-order."""
    path = Path(path)
    arr = np.ascontiguousarray(array, dtype="<f8")
    header = "{'descr': '<f8', 'fortran_order': False, 'shape': %s, }" % (
        repr(arr.shape),
    )
    # pad so magic+version+len+header is a multiple of 64, newline-terminated
    unpadded = len(_MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(bytes((1, 0)))
        f.write(struct.pack("<H", len(header)))
        f.write(header.encode("latin1"))
        arr.tofile(f)


def read_array(path) -> np.ndarray:
    """Read one embedding tensor: 4 axes, float, all values finite."""
    path = Path(path)
    arr = read_npy(path)
    if arr.ndim != 4:
        raise DataError(f"{path}: expected rank 4, got rank {arr.ndim}")
    if not np.isfinite(arr).all():
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise DataError(f"{path}: non-finite value at index {idx}")
    return arr


def write_array(tensor: np.ndarray, path) -> None:
    """Write one embedding tensor (must be 4-axis)."""
    tensor = np.asarray(tensor)
    if tensor.ndim != 4:
        raise DataError(f"cannot write rank-{tensor.ndim} array as an embedding tensor")
    write_npy(tensor, path)


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    path: Path
    split: str


@dataclass(frozen=True)
class Manifest:
    """Ordered dataset listing with one uniform embedding shape."""

    entries: tuple[ManifestEntry, ...]
    shape: tuple[int, ...]

    def split(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def ids(self, split: str) -> list[str]:
        return [e.sample_id for e in self.split(split)]

    def load_split(self, split: str) -> list[np.ndarray]:
        return [read_array(e.path) for e in self.split(split)]


def _read_csv_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: empty CSV")
    header = [c.strip() for c in rows[0]]
    if header != expected_header:
        raise DataError(
            f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}"
        )
    return rows[1:]


def load_manifest(path) -> Manifest:
    """Load and validate a manifest CSV (header sample_id,file_path,split).

    Validation is eager: every referenced file must exist and carry a valid
    rank-4 NPY header, and all shapes must agree. Sweeps are long; fail fast.
    """
    path = Path(path)
    rows = _read_csv_rows(path, ["sample_id", "file_path", "split"])
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    shape: Optional[tuple[int, ...]] = None
    for row in rows:
        if len(row) != 3:
            raise DataError(f"{path}: manifest row {row!r} does not have 3 fields")
        sample_id, file_path, split = (c.strip() for c in row)
        if sample_id in seen:
            raise DataError(f"{path}: duplicate sample_id {sample_id!r}")
        seen.add(sample_id)
        if split not in SPLITS:
            raise DataError(
                f"{path}: unknown split {split!r} for {sample_id!r} "
                f"(expected one of {'/'.join(SPLITS)})"
            )
        fp = Path(file_path)
        if not fp.is_absolute():
            fp = path.parent / fp
        if not fp.is_file():
            raise DataError(f"{path}: file {fp} for {sample_id!r} does not exist")
        file_shape, _ = read_npy_header(fp)
        if len(file_shape) != 4:
            raise DataError(f"{fp}: expected rank 4, got rank {len(file_shape)}")
        if shape is None:
            shape = file_shape
        elif file_shape != shape:
            raise DataError(
                f"{path}: shape mismatch: {sample_id!r} has {file_shape}, "
                f"manifest shape is {shape}"
            )
        entries.append(ManifestEntry(sample_id, fp, split))
    if shape is None:
        raise DataError(f"{path}: manifest has no entries")
    return Manifest(tuple(entries), shape)


def write_manifest(rows: list[tuple[str, str, str]], path) -> None:
    """Write manifest rows of (sample_id, file_path, split)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "file_path", "split"])
        w.writerows(rows)


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelRow:
    sample_id: str
    dsc: Optional[float] = None
    label: Optional[str] = None


@dataclass(frozen=True)
class LabelTable:
    rows: tuple[LabelRow, ...]

    def by_id(self) -> dict[str, LabelRow]:
        return {r.sample_id: r for r in self.rows}


def _validate_label_rows(rows: tuple[LabelRow, ...], origin: str) -> None:
    seen: set[str] = set()
    for r in rows:
        if r.sample_id in seen:
            raise DataError(f"{origin}: duplicate sample_id {r.sample_id!r}")
        seen.add(r.sample_id)
        if r.dsc is None and r.label is None:
            raise DataError(f"{origin}: row {r.sample_id!r} has neither dsc nor label")
        if r.dsc is not None and not (0.0 <= r.dsc <= 1.0):
            raise DataError(f"{origin}: dsc {r.dsc} for {r.sample_id!r} not in [0, 1]")
        if r.label is not None and r.label not in (ID, OOD):
            raise DataError(
                f"{origin}: label {r.label!r} for {r.sample_id!r} is not ID or OOD"
            )


def make_label_table(rows) -> LabelTable:
    table = LabelTable(tuple(rows))
    _validate_label_rows(table.rows, "label table")
    return table


def load_labels(path) -> LabelTable:
    """Load a label CSV (header sample_id,dsc,label; empty cell = absent)."""
    path = Path(path)
    raw = _read_csv_rows(path, ["sample_id", "dsc", "label"])
    rows = []
    for row in raw:
        if len(row) != 3:
            raise DataError(f"{path}: label row {row!r} does not have 3 fields")
        sample_id, dsc_s, label_s = (c.strip() for c in row)
        dsc = None
        if dsc_s:
            try:
                dsc = float(dsc_s)
            except ValueError:
                raise DataError(f"{path}: bad dsc {dsc_s!r} for {sample_id!r}") from None
        rows.append(LabelRow(sample_id, dsc, label_s or None))
    table = LabelTable(tuple(rows))
    _validate_label_rows(table.rows, str(path))
    return table


def save_labels(table: LabelTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "dsc", "label"])
        for r in table.rows:
            w.writerow([r.sample_id,
                        "" if r.dsc is None else repr(float(r.dsc)),
                        r.label or ""])


def label_from_dsc(table: LabelTable, threshold: float = 0.95) -> LabelTable:
    """Assign ID/OOD from Dice scores: ID when dsc >= threshold (inclusive)."""
    if not (0.0 <= threshold <= 1.0):
        raise DataError(f"threshold {threshold} not in [0, 1]")
    out = []
    for r in table.rows:
        if r.dsc is None:
            raise DataError(f"row {r.sample_id!r} lacks a dsc value")
        out.append(replace(r, label=ID if r.dsc >= threshold else OOD))
    return LabelTable(tuple(out))
