"""Dataset ingestion and window preprocessing.

Flow: load a numeric CSV into an `MtsRecord`, split it temporally, fit a
min-max scaler on the training split only, scale both splits with clipping
into [0, 1], cut sliding windows, label each window as anomalous iff it
covers at least one anomalous timestamp, and drop anomalous windows from the
training set.

Supported CSV schemas:

* ``generic-csv`` - one row per timestamp; ``feature_columns`` select the
  values, ``label_column`` (optional) a 0/1 anomaly column.
* ``smd`` - headerless server-telemetry matrix; features selected by index
  (default `SMD_FEATURE_COLUMNS`); point labels come from a separate
  one-column file passed as ``label_path``.
* ``mscm`` - univariate monitoring series; defaults to a ``value`` feature
  column and an ``anomaly``/``label`` label column when a header is present.
* ``pasta`` - per-product sales columns (header names starting ``QTY``) with
  matching promotion flags (``PROMO``); a timestamp is anomalous iff any
  promotion flag is set.

Columns may be given as integer indices or, when the file has a header, as
column names.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DatasetError, IngestionError, InputError
from .serialize import read_container, write_container

#: Default SMD telemetry columns: load_1, disk_r, disk_svc, disk_w, disk_wb
#: in the 38-column layout of the public Server Machine Dataset.
SMD_FEATURE_COLUMNS = (1, 9, 11, 13, 14)

SCHEMAS = ("generic-csv", "smd", "mscm", "pasta")


@dataclass
class MtsRecord:
    """A multivariate series: values (T, d) and optional 0/1 point labels (T,)."""

    values: np.ndarray
    point_labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise InputError(f"values must be (T, d), got {self.values.shape}")
        if self.point_labels is not None:
            self.point_labels = np.asarray(self.point_labels, dtype=np.uint8)
            if self.point_labels.shape != (self.values.shape[0],):
                raise InputError(
                    f"label length {self.point_labels.shape} != T {self.values.shape[0]}")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class WindowSet:
    """Flattened fixed-length windows with window-wise labels."""

    windows: np.ndarray          # (N, L*d) float64, time-major flattening
    labels: np.ndarray           # (N,) uint8
    window_len: int
    stride: int
    n_features: int
    source: str = ""

    def __post_init__(self):
        self.windows = np.asarray(self.windows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.windows.shape[0] != self.labels.shape[0]:
            raise InputError("windows/labels length mismatch")
        if self.windows.shape[1] != self.window_len * self.n_features:
            raise InputError("window width != window_len * n_features")

    def __len__(self) -> int:
        return self.windows.shape[0]


@dataclass
class Scaler:
    """Per-feature min/max fitted on the training split."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        self.minimum = np.asarray(self.minimum, dtype=np.float64)
        self.maximum = np.asarray(self.maximum, dtype=np.float64)
        if np.any(self.maximum < self.minimum):
            raise ConfigurationError("scaler max < min")


def _read_rows(path) -> list[list[str]]:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"file not found: {path}")
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _resolve_column(col, header: list[str] | None, path) -> int:
    if isinstance(col, (int, np.integer)):
        return int(col)
    if header is None:
        raise IngestionError(f"{path}: column {col!r} needs a header row")
    try:
        return header.index(col)
    except ValueError:
        raise IngestionError(f"{path}: missing column {col!r}") from None


def _parse_matrix(rows, header, columns, path) -> np.ndarray:
    width = len(rows[0]) if rows else 0
    offset = 2 if header is not None else 1  # 1-based file rows for messages
    out = np.empty((len(rows), len(columns)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {i + offset}: expected {width} columns, found {len(row)}")
        for j, col in enumerate(columns):
            if col >= len(row) or col < 0:
                raise IngestionError(f"{path}: row {i + offset}: no column {col}")
            cell = row[col].strip()
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {i + offset}, column {col}: "
                    f"non-numeric cell {cell!r}") from None
    return out


def load_dataset(path, schema: str = "generic-csv", feature_columns=None, *,
                 label_column=None, label_columns=None, label_path=None,
                 has_header: bool | None = None) -> MtsRecord:
    """Parse one CSV (plus optional label file) into an `MtsRecord`."""
    if schema not in SCHEMAS:
        raise ConfigurationError(f"unknown schema {schema!r}; expected one of {SCHEMAS}")
    rows = _read_rows(path)
    if not rows:
        raise IngestionError(f"{path}: file is empty")

    header = None
    if has_header is None:
        has_header = not all(_is_number(c) for c in rows[0])
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise IngestionError(f"{path}: no data rows after header")

    if schema == "smd" and feature_columns is None:
        feature_columns = SMD_FEATURE_COLUMNS
    if schema == "mscm":
        if feature_columns is None:
            feature_columns = ["value"] if header and "value" in header else [0]
        if label_column is None and header:
            for name in ("anomaly", "label", "is_anomaly"):
                if name in header:
                    label_column = name
                    break
    if schema == "pasta" and header:
        if feature_columns is None:
            feature_columns = [c for c in header if c.upper().startswith("QTY")]
            if not feature_columns:
                raise IngestionError(f"{path}: no QTY* columns for pasta schema")
        if label_columns is None:
            label_columns = [c for c in header if c.upper().startswith("PROMO")]

    if feature_columns is None:
        exclude = set()
        if label_column is not None:
            exclude.add(_resolve_column(label_column, header, path))
        feature_columns = [j for j in range(len(rows[0])) if j not in exclude]

    feat_idx = [_resolve_column(c, header, path) for c in feature_columns]
    values = _parse_matrix(rows, header, feat_idx, path)

    labels = None
    if label_columns:
        idx = [_resolve_column(c, header, path) for c in label_columns]
        flags = _parse_matrix(rows, header, idx, path)
        labels = (flags != 0).any(axis=1).astype(np.uint8)
    elif label_column is not None:
        idx = [_resolve_column(label_column, header, path)]
        labels = (_parse_matrix(rows, header, idx, path)[:, 0] != 0).astype(np.uint8)
    elif label_path is not None:
        lab_rows = _read_rows(label_path)
        if lab_rows and not _is_number(lab_rows[0][0]):
            lab_rows = lab_rows[1:]
        flat = _parse_matrix(lab_rows, None, [0], label_path)[:, 0]
        if flat.shape[0] != values.shape[0]:
            raise IngestionError(
                f"{label_path}: {flat.shape[0]} labels for {values.shape[0]} rows")
        labels = (flat != 0).astype(np.uint8)

    return MtsRecord(values, labels)


def split_series(record: MtsRecord, fraction: float = 0.5) -> tuple[MtsRecord, MtsRecord]:
    """Contiguous temporal split; the training prefix gets floor(T * fraction)."""
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"split fraction must be in (0, 1): {fraction}")
    t_train = int(record.length * fraction)
    if t_train < 1 or record.length - t_train < 1:
        raise ConfigurationError(
            f"split {fraction} leaves an empty segment (T={record.length})")
    labels = record.point_labels

    def piece(lo, hi):
        return MtsRecord(record.values[lo:hi],
                         None if labels is None else labels[lo:hi])

    return piece(0, t_train), piece(t_train, record.length)


def fit_scaler(train: MtsRecord) -> Scaler:
    return Scaler(train.values.min(axis=0), train.values.max(axis=0))


def apply_scaler(scaler: Scaler, record: MtsRecord) -> MtsRecord:
    """(x - min) / (max - min) per feature, clipped into [0, 1].

    Features constant in the training split map to 0.
    """
    span = scaler.maximum - scaler.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled = (record.values - scaler.minimum) / safe
    scaled[:, span == 0] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return MtsRecord(scaled, record.point_labels)


def window_count(total: int, window_len: int, stride: int) -> int:
    return (total - window_len) // stride + 1


def make_windows(record: MtsRecord, window_len: int, stride: int,
                 source: str = "") -> WindowSet:
    """Sliding windows flattened time-major; label = OR of covered points."""
    if window_len < 1 or stride < 1:
        raise InputError(f"window_len and stride must be positive: {window_len}, {stride}")
    if window_len > record.length:
        raise InputError(
            f"window_len {window_len} exceeds series length {record.length}")
    n = window_count(record.length, window_len, stride)
    starts = np.arange(n) * stride
    idx = starts[:, None] + np.arange(window_len)[None, :]
    windows = record.values[idx].reshape(n, window_len * record.n_features)
    if record.point_labels is None:
        labels = np.zeros(n, dtype=np.uint8)
    else:
        labels = record.point_labels[idx].max(axis=1).astype(np.uint8)
    return WindowSet(windows, labels, window_len, stride, record.n_features, source)


def drop_anomalous_train_windows(train: WindowSet) -> WindowSet:
    """Keep only label-0 windows, order preserved."""
    keep = train.labels == 0
    if not keep.any():
        raise DatasetError("no normal windows remain in the training set")
    return WindowSet(train.windows[keep], train.labels[keep],
                     train.window_len, train.stride, train.n_features,
                     train.source)


WINDOWS_KIND = "window-set"


def save_window_set(path, ws: WindowSet, extra_meta: dict | None = None) -> None:
    meta = {
        "window_len": ws.window_len,
        "stride": ws.stride,
        "n_features": ws.n_features,
        "source": ws.source,
    }
    if extra_meta:
        meta.update(extra_meta)
    write_container(path, WINDOWS_KIND,
                    {"windows": ws.windows, "labels": ws.labels}, meta)


def load_window_set(path) -> WindowSet:
    kind, arrays, meta = read_container(path)
    if kind != WINDOWS_KIND:
        raise ConfigurationError(f"{path}: expected {WINDOWS_KIND}, found {kind}")
    return WindowSet(arrays["windows"], arrays["labels"],
                     int(meta["window_len"]), int(meta["stride"]),
                     int(meta["n_features"]), str(meta.get("source", "")))
