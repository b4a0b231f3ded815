"""End-to-end operations behind the CLI: audit prediction files, train and
evaluate a baseline model on a descriptor, and sweep the binarization
threshold of a numeric target.

The sweep re-splits with the same seed at every threshold so the threshold
is the only moving variable; a threshold that leaves a single class in the
data (or makes a model untrainable) produces a row of nulls instead of
aborting the sweep.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datasets import DatasetDescriptor, PreparedDataset, SplitSpec, load, split
from .errors import DatasetError, RocUndefinedError
from .metrics import (BinaryLabel, FairnessPolicy, FairnessReport, GroupTag,
                      PredictionRecord, audit)
from .models import (DecisionTreeParams, GnbParams, TrainedModel,
                     train_decision_tree, train_gnb)
from .roc import AbrocaSlice, abroca_slice

MODEL_CHOICES = ("dt", "gnb")


def read_prediction_records(path: str | Path, *,
                            positive_label: str = "1",
                            negative_label: str | None = None,
                            protected_value: str = "protected",
                            non_protected_value: str | None = None) -> list[PredictionRecord]:
    """Parse a prediction CSV with columns actual, predicted, group[, score].

    A label cell must equal positive_label or, when negative_label is
    given, that token; with negative_label unset anything else counts as
    negative.  Group cells work the same way against protected_value /
    non_protected_value.  Scores are optional per the header; empty score
    cells yield scoreless records.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = [row for row in reader if row]

    index = {name: i for i, name in enumerate(header)}
    for name in ("actual", "predicted", "group"):
        if name not in index:
            raise DatasetError(f"{path}: missing column {name!r}")
    score_col = index.get("score")

    def to_label(token: str, rownum: int) -> BinaryLabel:
        if token == positive_label:
            return BinaryLabel.POSITIVE
        if negative_label is None or token == negative_label:
            return BinaryLabel.NEGATIVE
        raise DatasetError(f"{path}:{rownum}: unknown label value {token!r}")

    records = []
    for rownum, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}")
        cells = [cell.strip() for cell in row]
        group_token = cells[index["group"]]
        if group_token == protected_value:
            group = GroupTag.PROTECTED
        elif non_protected_value is None or group_token == non_protected_value:
            group = GroupTag.NON_PROTECTED
        else:
            raise DatasetError(f"{path}:{rownum}: unknown group value {group_token!r}")

        score = None
        if score_col is not None and cells[score_col] != "":
            try:
                score = float(cells[score_col])
            except ValueError:
                raise DatasetError(f"{path}:{rownum}: score {cells[score_col]!r} is not a number") from None
        try:
            records.append(PredictionRecord(
                actual=to_label(cells[index["actual"]], rownum),
                predicted=to_label(cells[index["predicted"]], rownum),
                group=group,
                score=score,
            ))
        except ValueError as exc:
            raise DatasetError(f"{path}:{rownum}: {exc}") from None
    return records


def train_model(kind: str, train: PreparedDataset,
                dt_params: DecisionTreeParams = DecisionTreeParams(),
                gnb_params: GnbParams = GnbParams()) -> TrainedModel:
    if kind == "dt":
        return train_decision_tree(train, dt_params)
    if kind == "gnb":
        return train_gnb(train, gnb_params)
    raise DatasetError(f"unknown model {kind!r} (choices: {', '.join(MODEL_CHOICES)})")


def records_from_predictions(data: PreparedDataset, predicted: np.ndarray,
                             scores: np.ndarray) -> list[PredictionRecord]:
    return [
        PredictionRecord(
            actual=BinaryLabel.from_bool(bool(data.labels[i])),
            predicted=BinaryLabel.from_bool(bool(predicted[i])),
            group=GroupTag.from_bool(bool(data.groups[i])),
            score=float(scores[i]),
        )
        for i in range(len(data))
    ]


def run_pipeline(descriptor: DatasetDescriptor, model_kind: str,
                 split_spec: SplitSpec, policy: FairnessPolicy,
                 base_dir: str | Path | None = None,
                 ) -> tuple[FairnessReport, AbrocaSlice | None]:
    """Load, split, train, predict on the test partition, and audit.

    Returns the report plus the ROC slice series (None when a test group
    is single-class, in which case the report's abroca is null too).
    """
    data = load(descriptor, base_dir)
    train, test = split(data, split_spec)
    model = train_model(model_kind, train)
    scores = model.predict_score(test.features)
    records = records_from_predictions(test, scores >= 0.5, scores)
    report = audit(records, policy)
    try:
        sl = abroca_slice(records)
    except RocUndefinedError:
        sl = None
    return report, sl


def expand_threshold_range(lo: float, hi: float, step: float) -> tuple[float, ...]:
    """Inclusive lo..hi with the given step (tolerant of float accumulation)."""
    if step <= 0:
        raise DatasetError("threshold step must be > 0")
    if hi < lo:
        raise DatasetError("threshold range is empty")
    count = int((hi - lo) / step + 1e-9) + 1
    return tuple(lo + i * step for i in range(count))


@dataclass(frozen=True)
class SweepSpec:
    """Threshold sweep over a numeric target: which thresholds, model, split."""

    descriptor: DatasetDescriptor
    thresholds: tuple[float, ...] = expand_threshold_range(4.0, 16.0, 1.0)
    model: str = "dt"
    split: SplitSpec = SplitSpec()
    policy: FairnessPolicy = FairnessPolicy()

    def __post_init__(self):
        if not self.thresholds:
            raise DatasetError("threshold range is empty")


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    n_positive: int
    n_negative: int
    report: FairnessReport | None  # None = degenerate threshold, all metrics null


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def sweep(spec: SweepSpec, base_dir: str | Path | None = None) -> SweepResult:
    """Re-binarize, re-split (same seed), train and audit at every threshold."""
    data = load(spec.descriptor, base_dir)
    if data.target_values is None:
        raise DatasetError("threshold sweep needs a numeric-threshold target")

    rows = []
    for threshold in spec.thresholds:
        labels = data.target_values >= threshold
        n_positive = int(labels.sum())
        n_negative = len(labels) - n_positive
        report = None
        if 0 < n_positive < len(labels):
            rethresholded = data.with_labels(labels)
            train, test = split(rethresholded, spec.split)
            try:
                model = train_model(spec.model, train)
                scores = model.predict_score(test.features)
                records = records_from_predictions(test, scores >= 0.5, scores)
                report = audit(records, spec.policy)
            except (DatasetError, RocUndefinedError):
                report = None
            except Exception as exc:
                from .errors import ModelError
                if isinstance(exc, ModelError):
                    report = None
                else:
                    raise
        rows.append(SweepRow(threshold=threshold, n_positive=n_positive,
                             n_negative=n_negative, report=report))
    return SweepResult(rows=tuple(rows))
