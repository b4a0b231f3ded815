"""Per-group ROC curves and the absolute area between them.

The between-area integrates |TPR_protected(t) - TPR_non_protected(t)| over
the FPR axis t in [0, 1].  Both curves are linearly interpolated onto the
merged grid of their breakpoints and the exact crossing points of the two
interpolants are inserted first, so the absolute difference is piecewise
linear on every cell and the trapezoid rule is exact.

Tied scores step TPR and FPR together (one breakpoint per distinct score);
at a repeated FPR value the interpolant takes the topmost TPR, which makes a
perfectly ranked group integrate as the constant-1 curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RocUndefinedError
from .metrics import GroupTag, PredictionRecord


@dataclass(frozen=True)
class RocCurve:
    """Ordered (FPR, TPR) breakpoints from (0, 0) to (1, 1), both coordinates non-decreasing."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = self.points
        if len(pts) < 2 or pts[0] != (0.0, 0.0) or pts[-1] != (1.0, 1.0):
            raise ValueError("ROC curve must run from (0, 0) to (1, 1)")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x1 < x0 or y1 < y0:
                raise ValueError("ROC curve coordinates must be non-decreasing")

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


@dataclass(frozen=True, eq=False)
class AbrocaSlice:
    """Both groups' interpolated TPR series on a shared FPR grid, plus the between-area."""

    grid: np.ndarray
    tpr_prot: np.ndarray
    tpr_non: np.ndarray
    area: float


def roc_curve(records: Iterable[PredictionRecord]) -> RocCurve:
    """Build the ROC curve of one group's scored records.

    Thresholds sweep the distinct scores in descending order; records tied
    on a score enter the same step.  Raises RocUndefinedError when a score
    is missing or the records do not contain both classes.
    """
    scored: list[tuple[float, bool]] = []
    for r in records:
        if r.score is None:
            raise RocUndefinedError("ROC undefined: record without score")
        scored.append((r.score, r.actual.is_positive))

    n_pos = sum(1 for _, pos in scored if pos)
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise RocUndefinedError("ROC undefined: group lacks a class")

    by_score: dict[float, list[int]] = {}
    for score, pos in scored:
        tally = by_score.setdefault(score, [0, 0])
        tally[0 if pos else 1] += 1

    points = [(0.0, 0.0)]
    tp = fp = 0
    for score in sorted(by_score, reverse=True):
        d_tp, d_fp = by_score[score]
        tp += d_tp
        fp += d_fp
        points.append((fp / n_neg, tp / n_pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return RocCurve(tuple(points))


def _envelope(curve: RocCurve) -> tuple[np.ndarray, np.ndarray]:
    """Collapse each repeated FPR to its topmost TPR, giving a function of FPR."""
    xs: list[float] = []
    ys: list[float] = []
    for x, y in curve.points:
        if xs and xs[-1] == x:
            ys[-1] = y  # TPR is non-decreasing, so the last point is the top
        else:
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


def _split_groups(records: Iterable[PredictionRecord]) -> tuple[list[PredictionRecord], list[PredictionRecord]]:
    prot = [r for r in records if r.group is GroupTag.PROTECTED]
    non = [r for r in records if r.group is GroupTag.NON_PROTECTED]
    return prot, non


def trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    """Trapezoidal integral of the piecewise-linear series y over x."""
    return float(np.sum((y[:-1] + y[1:]) / 2.0 * np.diff(x)))


def abroca_slice(records: Sequence[PredictionRecord]) -> AbrocaSlice:
    """Interpolate both groups' curves onto a shared grid and integrate |difference|.

    The grid merges both curves' FPR breakpoints and every crossing point of
    the two interpolants.  Raises RocUndefinedError when either group's
    curve is undefined.
    """
    prot, non = _split_groups(records)
    if not prot or not non:
        raise RocUndefinedError("ROC undefined: need records in both groups")
    x_p, y_p = _envelope(roc_curve(prot))
    x_n, y_n = _envelope(roc_curve(non))

    grid = np.union1d(x_p, x_n)
    tpr_p = np.interp(grid, x_p, y_p)
    tpr_n = np.interp(grid, x_n, y_n)

    # Insert exact interpolant crossings so |tpr_p - tpr_n| is linear per cell.
    diff = tpr_p - tpr_n
    sign_change = diff[:-1] * diff[1:] < 0
    if np.any(sign_change):
        i = np.nonzero(sign_change)[0]
        frac = diff[i] / (diff[i] - diff[i + 1])
        crossings = grid[i] + frac * (grid[i + 1] - grid[i])
        grid = np.union1d(grid, crossings)
        tpr_p = np.interp(grid, x_p, y_p)
        tpr_n = np.interp(grid, x_n, y_n)

    area = trapezoid(np.abs(tpr_p - tpr_n), grid)
    return AbrocaSlice(grid=grid, tpr_prot=tpr_p, tpr_non=tpr_n, area=area)


def abroca(records: Sequence[PredictionRecord]) -> float | None:
    """Absolute between-curve area in [0, 1]; None when either curve is undefined."""
    try:
        return abroca_slice(records).area
    except RocUndefinedError:
        return None
