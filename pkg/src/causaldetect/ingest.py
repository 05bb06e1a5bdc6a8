"""Loading, cleaning, standardising and windowing of multivariate series."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesSchema:
    feature_names: Tuple[str, ...]
    sample_period: float = 1.0

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        object.__setattr__(self, "feature_names", names)
        if not names:
            raise ValueError("schema needs at least one feature")
        if any(not n for n in names):
            raise ValueError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    def samples_for(self, seconds: float) -> int:
        """Window length in samples for a duration in seconds."""
        return int(round(seconds / self.sample_period))


@dataclass(frozen=True)
class Window:
    index: int
    data: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError(f"window {self.index} holds non-finite values")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError("window label must be 0 or 1")
        self.data.setflags(write=False)


@dataclass(frozen=True)
class WindowedStream:
    schema: SeriesSchema
    window_length: int
    windows: Tuple[Window, ...]

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self) -> Iterator[Window]:
        return iter(self.windows)

    def __getitem__(self, i) -> Window:
        return self.windows[i]

    @property
    def labels(self) -> Optional[np.ndarray]:
        if any(w.label is None for w in self.windows):
            return None
        return np.array([w.label for w in self.windows], dtype=int)

    def rows(self) -> np.ndarray:
        return np.vstack([w.data for w in self.windows])


@dataclass(frozen=True)
class PriorKnowledge:
    """Known attack points and the nodes they are expected to impact."""

    attack_nodes: FrozenSet[str] = frozenset()
    impact_nodes: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "attack_nodes", frozenset(map(str, self.attack_nodes)))
        object.__setattr__(self, "impact_nodes", frozenset(map(str, self.impact_nodes)))

    @property
    def nodes(self) -> FrozenSet[str]:
        return self.attack_nodes | self.impact_nodes

    def validate(self, schema: SeriesSchema, require_nonempty: bool = True) -> None:
        unknown = self.nodes - set(schema.feature_names)
        if unknown:
            raise ValueError(f"prior knowledge names unknown features: {sorted(unknown)}")
        if require_nonempty and not self.nodes:
            raise ValueError("prior knowledge is empty")

    def to_dict(self) -> dict:
        return {"attack_nodes": sorted(self.attack_nodes), "impact_nodes": sorted(self.impact_nodes)}

    @classmethod
    def from_dict(cls, data: dict) -> "PriorKnowledge":
        return cls(frozenset(data.get("attack_nodes", ())), frozenset(data.get("impact_nodes", ())))


@dataclass
class RawSeries:
    schema: SeriesSchema
    values: np.ndarray
    labels: Optional[np.ndarray] = None
    dropped_rows: int = 0
    constant_features: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.values.shape[0]


def _parse_float(cell: str) -> float:
    value = float(cell)
    if not math.isfinite(value):
        raise ValueError(cell)
    return value


def load_csv(
    path: Union[str, Path],
    schema_hint: Optional[SeriesSchema] = None,
    label_column: str = "label",
    sample_period: float = 1.0,
) -> RawSeries:
    """Read a header-first CSV of numeric features and an optional label column.

    Rows with a missing, non-numeric or non-finite cell (or a label outside
    {0, 1}) are dropped; the number dropped is stored on the result and logged.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            body = list(reader)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not header:
        raise ValueError(f"{path} has no header row")
    header = [h.strip() for h in header]
    has_label = label_column in header
    features = [h for h in header if h != label_column]
    if schema_hint is not None:
        if list(schema_hint.feature_names) != features:
            raise ValueError(
                f"header {features} does not match schema {list(schema_hint.feature_names)}"
            )
        schema = schema_hint
    else:
        schema = SeriesSchema(tuple(features), sample_period)
    feat_idx = [header.index(f) for f in features]
    label_idx = header.index(label_column) if has_label else None

    values, labels, dropped = [], [], 0
    for row in body:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) != len(header):
                raise ValueError("ragged row")
            vals = [_parse_float(row[i]) for i in feat_idx]
            if label_idx is not None:
                lab = _parse_float(row[label_idx])
                if lab not in (0.0, 1.0):
                    raise ValueError("label")
                labels.append(int(lab))
        except ValueError:
            dropped += 1
            continue
        values.append(vals)
    if dropped:
        logger.info("%s: dropped %d invalid rows", path, dropped)
    if len(values) < 2:
        raise ValueError(f"{path} has fewer than 2 valid rows")
    return RawSeries(
        schema,
        np.asarray(values, dtype=float),
        np.asarray(labels, dtype=int) if has_label else None,
        dropped,
    )


def standardize(series: Union[RawSeries, np.ndarray]):
    """Centre each feature and scale it to unit population standard deviation.

    Constant features become all-zero columns. For a ``RawSeries`` the names of
    those features are recorded in ``constant_features``; for a bare array the
    function returns ``(values, constant_mask)``.
    """
    values = series.values if isinstance(series, RawSeries) else np.asarray(series, dtype=float)
    if values.size == 0:
        raise ValueError("cannot standardize an empty series")
    mu = values.mean(axis=0)
    sd = values.std(axis=0)
    constant = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
    out = np.zeros_like(values)
    ok = ~constant
    out[:, ok] = (values[:, ok] - mu[ok]) / sd[ok]
    if isinstance(series, RawSeries):
        names = [n for n, c in zip(series.schema.feature_names, constant) if c]
        return RawSeries(series.schema, out, series.labels, series.dropped_rows, names)
    return out, constant


def segment(
    series: Union[RawSeries, np.ndarray],
    k: int,
    labels: Optional[Sequence[int]] = None,
    schema: Optional[SeriesSchema] = None,
) -> WindowedStream:
    """Cut a series into ``floor(N / k)`` contiguous windows of ``k`` rows.

    A window is labelled 1 when any of its rows is labelled 1. The trailing
    remainder of fewer than ``k`` rows is discarded.
    """
    if isinstance(series, RawSeries):
        values = series.values
        schema = schema or series.schema
        if labels is None:
            labels = series.labels
    else:
        values = np.asarray(series, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        schema = schema or SeriesSchema(tuple(f"x{i}" for i in range(values.shape[1])))
    if k < 2:
        raise ValueError("window length must be at least 2")
    n = values.shape[0]
    if k > n:
        raise ValueError(f"window length {k} exceeds series length {n}")
    if values.shape[1] != schema.feature_count:
        raise ValueError("series width does not match schema")
    if labels is not None:
        labels = np.asarray(labels, dtype=int)
        if labels.shape[0] != n:
            raise ValueError("labels must have one entry per row")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("row labels must be 0 or 1")
    windows = []
    for w in range(n // k):
        rows = slice(w * k, (w + 1) * k)
        label = int(labels[rows].max()) if labels is not None else None
        windows.append(Window(w, values[rows].copy(), label))
    return WindowedStream(schema, k, tuple(windows))
