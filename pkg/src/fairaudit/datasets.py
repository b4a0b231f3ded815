"""Turn raw CSV datasets into group-tagged binary-classification tables.

A plain-text descriptor names the target column and its binarization rule
(numeric threshold or explicit value sets), the protected column and the
value mapped to the protected group, and the feature columns split into
numeric and categorical lists.  Loading drops rows with missing values in
any used column (optional), one-hot encodes categoricals with category
order fixed by first appearance, and reports the positives:negatives
imbalance ratio.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DatasetError
from .metrics import BinaryLabel

DATA_DIR_ENV = "FAIRNESS_AUDIT_DATA_DIR"

_DESCRIPTOR_KEYS = {
    "source", "delimiter", "target", "positive_threshold", "positive_values",
    "negative_values", "protected", "protected_value", "drop_missing",
    "missing_values", "numeric_features", "categorical_features",
}


@dataclass(frozen=True)
class DatasetDescriptor:
    """Declarative recipe for one CSV dataset."""

    source: str
    target: str
    protected: str
    protected_value: str
    numeric_features: tuple[str, ...] = ()
    categorical_features: tuple[str, ...] = ()
    positive_threshold: float | None = None
    positive_values: frozenset[str] | None = None
    negative_values: frozenset[str] | None = None
    drop_missing: bool = True
    delimiter: str = ","
    missing_values: frozenset[str] = frozenset({"", "NA"})
    base_dir: Path | None = None  # directory of the descriptor file, for path resolution

    def __post_init__(self):
        features = self.numeric_features + self.categorical_features
        if not features:
            raise DatasetError("descriptor needs at least one feature column")
        if len(set(features)) != len(features):
            raise DatasetError("feature columns listed more than once")
        if self.target in features or self.protected in features:
            raise DatasetError("target and protected columns must not be features")
        has_threshold = self.positive_threshold is not None
        has_values = self.positive_values is not None or self.negative_values is not None
        if has_threshold and has_values:
            raise DatasetError("give either positive_threshold or positive/negative value sets, not both")
        if has_threshold:
            if not math.isfinite(self.positive_threshold):
                raise DatasetError("positive_threshold must be finite")
        else:
            if not self.positive_values or not self.negative_values:
                raise DatasetError("value rule needs both positive_values and negative_values")
            if self.positive_values & self.negative_values:
                raise DatasetError("positive_values and negative_values overlap")
        if len(self.delimiter) != 1:
            raise DatasetError("delimiter must be a single character")


def parse_descriptor(path: str | Path) -> DatasetDescriptor:
    """Parse a ``key: value`` descriptor file ('#' starts a comment line)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read descriptor {path}: {exc}") from exc

    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise DatasetError(f"{path}:{lineno}: expected 'key: value'")
        key, value = line.split(":", 1)
        key = key.strip()
        if key not in _DESCRIPTOR_KEYS:
            raise DatasetError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise DatasetError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value.strip()

    def split_list(value: str) -> tuple[str, ...]:
        return tuple(item.strip() for item in value.split(",") if item.strip())

    for required in ("source", "target", "protected", "protected_value"):
        if required not in raw:
            raise DatasetError(f"{path}: missing required key {required!r}")

    kwargs: dict = {
        "source": raw["source"],
        "target": raw["target"],
        "protected": raw["protected"],
        "protected_value": raw["protected_value"],
        "base_dir": path.parent,
    }
    if "positive_threshold" in raw:
        try:
            kwargs["positive_threshold"] = float(raw["positive_threshold"])
        except ValueError as exc:
            raise DatasetError(f"{path}: positive_threshold is not a number") from exc
    if "positive_values" in raw:
        kwargs["positive_values"] = frozenset(split_list(raw["positive_values"]))
    if "negative_values" in raw:
        kwargs["negative_values"] = frozenset(split_list(raw["negative_values"]))
    if "numeric_features" in raw:
        kwargs["numeric_features"] = split_list(raw["numeric_features"])
    if "categorical_features" in raw:
        kwargs["categorical_features"] = split_list(raw["categorical_features"])
    if "drop_missing" in raw:
        token = raw["drop_missing"].lower()
        if token not in ("true", "false"):
            raise DatasetError(f"{path}: drop_missing must be true or false")
        kwargs["drop_missing"] = token == "true"
    if "delimiter" in raw:
        kwargs["delimiter"] = {"tab": "\t"}.get(raw["delimiter"], raw["delimiter"])
    if "missing_values" in raw:
        kwargs["missing_values"] = frozenset(split_list(raw["missing_values"])) | {""}
    return DatasetDescriptor(**kwargs)


@dataclass(eq=False)
class PreparedDataset:
    """Feature matrix plus per-row label and group tags, ready for training.

    ``labels`` is True for the positive class, ``groups`` True for the
    protected group.  ``target_values`` keeps the raw numeric target when
    the descriptor used a threshold rule, which is what threshold sweeps
    re-binarize.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    imbalance_ratio: float
    target_values: np.ndarray | None = None
    n_source_rows: int | None = None

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def build(cls, features, labels, groups, feature_names,
              target_values=None, n_source_rows=None) -> "PreparedDataset":
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=bool)
        groups = np.asarray(groups, dtype=bool)
        if not (len(features) == len(labels) == len(groups)):
            raise DatasetError("row, label and group counts differ")
        return cls(
            features=features,
            labels=labels,
            groups=groups,
            feature_names=tuple(feature_names),
            imbalance_ratio=imbalance_ratio(labels),
            target_values=None if target_values is None else np.asarray(target_values, dtype=float),
            n_source_rows=n_source_rows,
        )

    def subset(self, indices: np.ndarray) -> "PreparedDataset":
        return PreparedDataset.build(
            self.features[indices], self.labels[indices], self.groups[indices],
            self.feature_names,
            None if self.target_values is None else self.target_values[indices],
        )

    def with_labels(self, labels: np.ndarray) -> "PreparedDataset":
        """Same rows with a re-binarized label column (imbalance recomputed)."""
        return PreparedDataset.build(
            self.features, labels, self.groups, self.feature_names,
            self.target_values, self.n_source_rows,
        )

    @property
    def imbalance_display(self) -> str:
        return f"{self.imbalance_ratio:.2f}:1"

    def to_csv(self, path: str | Path) -> None:
        """Write the prepared table back out so an audit can be reproduced."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            header = list(self.feature_names) + ["label", "group"]
            if self.target_values is not None:
                header.append("target_value")
            writer.writerow(header)
            for i in range(len(self)):
                row = [repr(float(v)) for v in self.features[i]]
                row.append("positive" if self.labels[i] else "negative")
                row.append("protected" if self.groups[i] else "non_protected")
                if self.target_values is not None:
                    row.append(repr(float(self.target_values[i])))
                writer.writerow(row)


def imbalance_ratio(labels: np.ndarray) -> float:
    """Positives-to-negatives ratio; inf when there are no negatives."""
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_neg == 0:
        return math.inf
    return n_pos / n_neg


def binarize_by_threshold(values: Iterable, threshold: float) -> list[BinaryLabel]:
    """Map numeric values to Positive when >= threshold, Negative otherwise."""
    if not math.isfinite(threshold):
        raise DatasetError("threshold must be finite")
    labels = []
    for v in values:
        try:
            number = float(v)
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"non-numeric value {v!r} cannot be thresholded") from exc
        labels.append(BinaryLabel.from_bool(number >= threshold))
    return labels


def resolve_source(descriptor: DatasetDescriptor, base_dir: str | Path | None = None) -> Path:
    """Locate the descriptor's CSV: absolute path, explicit base dir, the
    descriptor's own directory, $FAIRNESS_AUDIT_DATA_DIR, then the cwd."""
    source = Path(descriptor.source)
    if source.is_absolute():
        if source.exists():
            return source
        raise DatasetError(f"dataset file not found: {source}")
    candidates = []
    if base_dir is not None:
        candidates.append(Path(base_dir) / source)
    if descriptor.base_dir is not None:
        candidates.append(descriptor.base_dir / source)
    env_dir = os.environ.get(DATA_DIR_ENV)
    if env_dir:
        candidates.append(Path(env_dir) / source)
    candidates.append(Path.cwd() / source)
    for candidate in candidates:
        if candidate.exists():
            return candidate
    tried = ", ".join(str(c) for c in candidates)
    raise DatasetError(f"dataset file {descriptor.source!r} not found (tried: {tried})")


def load(descriptor: DatasetDescriptor, base_dir: str | Path | None = None) -> PreparedDataset:
    """Read, clean, binarize and encode the descriptor's CSV.

    Rows with a missing value in any used column are dropped when
    ``drop_missing``; a target value not covered by the positive rule, an
    unparseable numeric cell, or a column name absent from the header is an
    error.
    """
    path = resolve_source(descriptor, base_dir)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=descriptor.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = [row for row in reader if row]

    header = [name.strip() for name in header]
    index: dict[str, int] = {}
    for i, name in enumerate(header):
        index.setdefault(name, i)
    used = [descriptor.target, descriptor.protected,
            *descriptor.numeric_features, *descriptor.categorical_features]
    for name in used:
        if name not in index:
            raise DatasetError(f"{path}: column {name!r} not in header")

    missing = descriptor.missing_values
    threshold = descriptor.positive_threshold

    labels: list[bool] = []
    groups: list[bool] = []
    numeric_rows: list[list[float]] = []
    categorical_rows: list[list[str]] = []
    target_values: list[float] = []

    for rownum, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}")
        cells = {name: row[index[name]].strip() for name in used}
        if descriptor.drop_missing and any(cells[name] in missing for name in used):
            continue

        target_cell = cells[descriptor.target]
        if threshold is not None:
            try:
                value = float(target_cell)
            except ValueError:
                raise DatasetError(
                    f"{path}:{rownum}: target {target_cell!r} is not numeric") from None
            labels.append(value >= threshold)
            target_values.append(value)
        elif target_cell in descriptor.positive_values:
            labels.append(True)
        elif target_cell in descriptor.negative_values:
            labels.append(False)
        else:
            raise DatasetError(
                f"{path}:{rownum}: target value {target_cell!r} not covered by the positive rule")

        groups.append(cells[descriptor.protected] == descriptor.protected_value)

        numeric: list[float] = []
        for name in descriptor.numeric_features:
            try:
                numeric.append(float(cells[name]))
            except ValueError:
                raise DatasetError(
                    f"{path}:{rownum}: column {name!r} value {cells[name]!r} is not numeric") from None
        numeric_rows.append(numeric)
        categorical_rows.append([cells[name] for name in descriptor.categorical_features])

    if not labels:
        raise DatasetError(f"{path}: no usable rows")

    # One-hot encode categoricals; category order fixed by first appearance.
    categories: list[list[str]] = []
    for j, name in enumerate(descriptor.categorical_features):
        seen: list[str] = []
        for row in categorical_rows:
            if row[j] not in seen:
                seen.append(row[j])
        categories.append(seen)

    feature_names = list(descriptor.numeric_features)
    for name, cats in zip(descriptor.categorical_features, categories):
        feature_names.extend(f"{name}={cat}" for cat in cats)

    n = len(labels)
    width = len(feature_names)
    features = np.zeros((n, width), dtype=float)
    n_numeric = len(descriptor.numeric_features)
    if n_numeric:
        features[:, :n_numeric] = np.array(numeric_rows, dtype=float)
    offset = n_numeric
    for j, cats in enumerate(categories):
        position = {cat: offset + k for k, cat in enumerate(cats)}
        for i, row in enumerate(categorical_rows):
            features[i, position[row[j]]] = 1.0
        offset += len(cats)

    return PreparedDataset.build(
        features, labels, groups, feature_names,
        target_values=np.array(target_values) if threshold is not None else None,
        n_source_rows=len(rows),
    )


def load_prepared_csv(path: str | Path) -> PreparedDataset:
    """Read a table previously written by PreparedDataset.to_csv."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    has_target = header and header[-1] == "target_value"
    tail = 3 if has_target else 2
    if len(header) < tail or header[len(header) - tail] != "label":
        raise DatasetError(f"{path}: not a prepared-dataset CSV")
    n_features = len(header) - tail
    features = [[float(cell) for cell in row[:n_features]] for row in rows]
    labels = [row[n_features] == "positive" for row in rows]
    groups = [row[n_features + 1] == "protected" for row in rows]
    target = [float(row[-1]) for row in rows] if has_target else None
    return PreparedDataset.build(
        features, labels, groups, header[:n_features],
        target_values=target, n_source_rows=len(rows),
    )


@dataclass(frozen=True)
class SplitSpec:
    """Seeded uniform shuffle split; not stratified."""

    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError("train_fraction must be in (0, 1)")
        if self.seed < 0:
            raise DatasetError("seed must be non-negative")


def split(data: PreparedDataset, spec: SplitSpec) -> tuple[PreparedDataset, PreparedDataset]:
    """Shuffle rows with the spec's seed; the first floor(fraction * N) go to train."""
    n = len(data)
    if n < 2:
        raise DatasetError("need at least 2 rows to split")
    n_train = int(spec.train_fraction * n)
    if n_train < 1 or n - n_train < 1:
        raise DatasetError("split would leave an empty partition")
    order = np.random.default_rng(spec.seed).permutation(n)
    return data.subset(order[:n_train]), data.subset(order[n_train:])
