"""Group fairness measures over per-group confusion counts.

All measures compare a protected group against a non-protected group on a
binary prediction task.  A metric evaluates to ``None`` (serialized as null)
whenever one of its defining denominators is zero: a rate over an empty
subpopulation has no value, and treatment equality in particular is reported
as null instead of +/-infinity when a group has no false positives.

Counting is exact integer arithmetic; division happens only in the final
step of each measure.  Every function here is pure, so concurrent use is
safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import NoRecordsError


class BinaryLabel(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @classmethod
    def from_bool(cls, positive: bool) -> "BinaryLabel":
        return cls.POSITIVE if positive else cls.NEGATIVE

    @property
    def is_positive(self) -> bool:
        return self is BinaryLabel.POSITIVE


class GroupTag(Enum):
    PROTECTED = "protected"
    NON_PROTECTED = "non_protected"

    @classmethod
    def from_bool(cls, protected: bool) -> "GroupTag":
        return cls.PROTECTED if protected else cls.NON_PROTECTED

    @property
    def is_protected(self) -> bool:
        return self is GroupTag.PROTECTED


@dataclass(frozen=True)
class PredictionRecord:
    """One individual's true label, predicted label, optional score and group.

    ``score`` is the predicted probability of the positive class; when
    present it must lie in [0, 1].
    """

    actual: BinaryLabel
    predicted: BinaryLabel
    group: GroupTag
    score: float | None = None

    def __post_init__(self):
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroupedConfusion:
    """TP/FP/FN/TN counts split by protected vs non-protected group."""

    tp_prot: int
    fp_prot: int
    fn_prot: int
    tn_prot: int
    tp_non: int
    fp_non: int
    fn_non: int
    tn_non: int

    def __post_init__(self):
        for name in ("tp_prot", "fp_prot", "fn_prot", "tn_prot",
                     "tp_non", "fp_non", "fn_non", "tn_non"):
            if getattr(self, name) < 0:
                raise ValueError(f"confusion count {name} must be >= 0")

    @property
    def n_protected(self) -> int:
        return self.tp_prot + self.fp_prot + self.fn_prot + self.tn_prot

    @property
    def n_non_protected(self) -> int:
        return self.tp_non + self.fp_non + self.fn_non + self.tn_non

    @property
    def total(self) -> int:
        return self.n_protected + self.n_non_protected

    def swapped(self) -> "GroupedConfusion":
        """Counts with the protected / non-protected roles exchanged."""
        return GroupedConfusion(
            tp_prot=self.tp_non, fp_prot=self.fp_non,
            fn_prot=self.fn_non, tn_prot=self.tn_non,
            tp_non=self.tp_prot, fp_non=self.fp_prot,
            fn_non=self.fn_prot, tn_non=self.tn_prot,
        )


@dataclass(frozen=True)
class FairnessPolicy:
    """Pass/fail gate: the audit passes when |statistical parity| <= epsilon."""

    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class FairnessReport:
    """Every measure computed from one set of predictions.

    ``None`` fields are not-applicable markers.  ``gate_passed`` is None when
    statistical parity itself is not applicable.
    """

    confusion: GroupedConfusion
    accuracy: float | None
    balanced_accuracy: float | None
    statistical_parity: float | None
    equal_opportunity: float | None
    equalized_odds: float | None
    predictive_parity: float | None
    predictive_equality: float | None
    treatment_equality: float | None
    abroca: float | None
    epsilon: float
    gate_passed: bool | None


def confusion_from_records(records: Iterable[PredictionRecord]) -> GroupedConfusion:
    """Count each record into one of the eight per-group confusion cells."""
    cells = {
        (True, True, True): 0, (True, True, False): 0,
        (True, False, True): 0, (True, False, False): 0,
        (False, True, True): 0, (False, True, False): 0,
        (False, False, True): 0, (False, False, False): 0,
    }
    n = 0
    for r in records:
        cells[(r.group.is_protected, r.actual.is_positive, r.predicted.is_positive)] += 1
        n += 1
    if n == 0:
        raise NoRecordsError("no records")
    return GroupedConfusion(
        tp_prot=cells[(True, True, True)],
        fn_prot=cells[(True, True, False)],
        fp_prot=cells[(True, False, True)],
        tn_prot=cells[(True, False, False)],
        tp_non=cells[(False, True, True)],
        fn_non=cells[(False, True, False)],
        fp_non=cells[(False, False, True)],
        tn_non=cells[(False, False, False)],
    )


def statistical_parity(c: GroupedConfusion) -> float | None:
    """Positive-prediction rate of the non-protected group minus the protected group.

    Signed, in [-1, 1]; positive values mean the protected group receives
    fewer positive predictions.  None when either group is empty.
    """
    if c.n_protected == 0 or c.n_non_protected == 0:
        return None
    rate_non = (c.tp_non + c.fp_non) / c.n_non_protected
    rate_prot = (c.tp_prot + c.fp_prot) / c.n_protected
    return rate_non - rate_prot


def equal_opportunity(c: GroupedConfusion) -> float | None:
    """Absolute TPR gap between the groups, in [0, 1].

    None when either group has no actual positives.
    """
    pos_prot = c.tp_prot + c.fn_prot
    pos_non = c.tp_non + c.fn_non
    if pos_prot == 0 or pos_non == 0:
        return None
    return abs(c.tp_non / pos_non - c.tp_prot / pos_prot)


def predictive_equality(c: GroupedConfusion) -> float | None:
    """Absolute FPR gap between the groups, in [0, 1].

    None when either group has no actual negatives.
    """
    neg_prot = c.fp_prot + c.tn_prot
    neg_non = c.fp_non + c.tn_non
    if neg_prot == 0 or neg_non == 0:
        return None
    return abs(c.fp_prot / neg_prot - c.fp_non / neg_non)


def equalized_odds(c: GroupedConfusion) -> float | None:
    """Sum of the absolute TPR gap and the absolute FPR gap, in [0, 2].

    Decomposes exactly as equal_opportunity + predictive_equality; None as
    soon as either term is.
    """
    eo = equal_opportunity(c)
    pe = predictive_equality(c)
    if eo is None or pe is None:
        return None
    return eo + pe


def predictive_parity(c: GroupedConfusion) -> float | None:
    """Absolute precision (PPV) gap between the groups, in [0, 1].

    None when either group has no predicted positives.
    """
    pp_prot = c.tp_prot + c.fp_prot
    pp_non = c.tp_non + c.fp_non
    if pp_prot == 0 or pp_non == 0:
        return None
    return abs(c.tp_prot / pp_prot - c.tp_non / pp_non)


def treatment_equality(c: GroupedConfusion) -> float | None:
    """FN/FP ratio of the protected group minus the non-protected group.

    Signed and unbounded; None (never infinity) when a group has zero false
    positives.
    """
    if c.fp_prot == 0 or c.fp_non == 0:
        return None
    return c.fn_prot / c.fp_prot - c.fn_non / c.fp_non


def accuracy(c: GroupedConfusion) -> float | None:
    """Pooled fraction of correct predictions over both groups."""
    if c.total == 0:
        return None
    return (c.tp_prot + c.tp_non + c.tn_prot + c.tn_non) / c.total


def balanced_accuracy(c: GroupedConfusion) -> float | None:
    """Mean of pooled TPR and pooled TNR; None if a pooled class is empty."""
    pos = c.tp_prot + c.tp_non + c.fn_prot + c.fn_non
    neg = c.fp_prot + c.fp_non + c.tn_prot + c.tn_non
    if pos == 0 or neg == 0:
        return None
    tpr = (c.tp_prot + c.tp_non) / pos
    tnr = (c.tn_prot + c.tn_non) / neg
    return (tpr + tnr) / 2


def audit(records: Sequence[PredictionRecord],
          policy: FairnessPolicy = FairnessPolicy()) -> FairnessReport:
    """Compute every measure for a set of prediction records.

    ABROCA is included only when every record carries a score and both
    groups contain both classes; degenerate groups downgrade individual
    metrics to None rather than aborting the audit.
    """
    records = list(records)
    c = confusion_from_records(records)
    sp = statistical_parity(c)

    abroca_value = None
    if records and all(r.score is not None for r in records):
        from .roc import abroca  # late import; roc depends on this module
        abroca_value = abroca(records)

    return FairnessReport(
        confusion=c,
        accuracy=accuracy(c),
        balanced_accuracy=balanced_accuracy(c),
        statistical_parity=sp,
        equal_opportunity=equal_opportunity(c),
        equalized_odds=equalized_odds(c),
        predictive_parity=predictive_parity(c),
        predictive_equality=predictive_equality(c),
        treatment_equality=treatment_equality(c),
        abroca=abroca_value,
        epsilon=policy.epsilon,
        gate_passed=None if sp is None else abs(sp) <= policy.epsilon,
    )
