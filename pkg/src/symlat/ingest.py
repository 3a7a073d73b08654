"""Dataset ingestion: headed CSV and the big-endian IDX image/label format."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .data import RegressionDataset
from .errors import DataError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _open(path, mode: str):
    try:
        return open(path, mode, **({} if "b" in mode else
                                   {"encoding": "utf-8", "newline": ""}))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def ingest_csv(path, response: str = "y") -> RegressionDataset:
    """Read a CSV with a header row: feature columns plus one response column."""
    path = Path(path)
    with _open(path, "r") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise DataError(f"{path}: header has no response column {response!r}")
        y_col = header.index(response)
        feat_cols = [i for i in range(len(header)) if i != y_col]
        if not feat_cols:
            raise DataError(f"{path}: no feature columns")
        rows = []
        ys = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                rows.append([float(row[i]) for i in feat_cols])
                ys.append(float(row[y_col]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two data rows")
    return RegressionDataset(np.asarray(rows), np.asarray(ys))


def _read_exact(fh, count: int, path, what: str) -> bytes:
    offset = fh.tell()
    buf = fh.read(count)
    if len(buf) != count:
        raise DataError(f"{path}: truncated {what} at byte offset {offset} "
                        f"(wanted {count} bytes, got {len(buf)})")
    return buf


def ingest_idx(images_path, labels_path) -> RegressionDataset:
    """Read paired IDX image/label files; pixels are rescaled to [0, 1]."""
    images_path = Path(images_path)
    labels_path = Path(labels_path)
    with _open(images_path, "rb") as fh:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, images_path, "header"))
        if magic != IDX_IMAGES_MAGIC:
            raise DataError(f"{images_path}: bad image magic 0x{magic:08x} at byte offset 0 "
                            f"(expected 0x{IDX_IMAGES_MAGIC:08x})")
        payload = _read_exact(fh, n * rows * cols, images_path, "pixel data")
        extra = fh.read(1)
        if extra:
            raise DataError(f"{images_path}: trailing bytes at offset {16 + n * rows * cols}")
    with _open(labels_path, "rb") as fh:
        magic, n_labels = struct.unpack(">II", _read_exact(fh, 8, labels_path, "header"))
        if magic != IDX_LABELS_MAGIC:
            raise DataError(f"{labels_path}: bad label magic 0x{magic:08x} at byte offset 0 "
                            f"(expected 0x{IDX_LABELS_MAGIC:08x})")
        label_bytes = _read_exact(fh, n_labels, labels_path, "label data")
    if n_labels != n:
        raise DataError(f"{labels_path}: {n_labels} labels for {n} images")
    X = np.frombuffer(payload, dtype=np.uint8).astype(float).reshape(n, rows * cols) / 255.0
    Y = np.frombuffer(label_bytes, dtype=np.uint8).astype(float)
    return RegressionDataset(X, Y)


def ingest(path, fmt: str, labels=None, response: str = "y") -> RegressionDataset:
    if fmt == "csv":
        return ingest_csv(path, response=response)
    if fmt == "idx":
        if labels is None:
            raise DataError("idx ingestion needs both an image file and a label file")
        return ingest_idx(path, labels)
    raise DataError(f"unknown dataset format {fmt!r}")
