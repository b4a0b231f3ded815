"""Baseline classifiers: a CART-style decision tree and Gaussian naive Bayes.

Both learn from a PreparedDataset, score rows with the probability of the
positive class, and predict Positive when the score is >= 0.5 (a tie at
exactly 0.5 goes Positive).  Training is deterministic: tree split ties
break toward the lowest feature index, then the lowest threshold.

Trained models serialize to a small versioned JSON text format so an audit
can be replayed later.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import PreparedDataset
from .errors import ModelError

MODEL_FORMAT = "fairaudit-model"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class DecisionTreeParams:
    max_depth: int | None = None  # None = unlimited
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ModelError("max_depth must be positive")
        if self.min_samples_split < 2:
            raise ModelError("min_samples_split must be >= 2")


@dataclass(frozen=True)
class GnbParams:
    # Fraction of the largest per-feature variance added to every
    # class-conditional variance, to keep densities finite.
    variance_floor_fraction: float = 1e-9

    def __post_init__(self):
        if self.variance_floor_fraction <= 0:
            raise ModelError("variance_floor_fraction must be positive")


class _Node:
    """Internal split node or leaf; leaves carry the positive fraction."""

    __slots__ = ("feature", "threshold", "left", "right", "score", "n_samples")

    def __init__(self, *, feature=None, threshold=None, left=None, right=None,
                 score=None, n_samples=0):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.score = score
        self.n_samples = n_samples

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf": True, "score": self.score, "n_samples": self.n_samples}
        return {
            "leaf": False,
            "feature": self.feature,
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "_Node":
        if data["leaf"]:
            return cls(score=data["score"], n_samples=data["n_samples"])
        return cls(
            feature=data["feature"],
            threshold=data["threshold"],
            n_samples=data["n_samples"],
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


def gini_impurity(labels: np.ndarray) -> float:
    """Gini impurity of a boolean label vector."""
    n = len(labels)
    if n == 0:
        return 0.0
    p = labels.sum() / n
    return float(1.0 - p * p - (1.0 - p) * (1.0 - p))


def _best_split(features: np.ndarray, labels: np.ndarray) -> tuple[int, float] | None:
    """Split minimizing the weighted child Gini impurity.

    Candidates are midpoints between consecutive distinct sorted values.
    Ties break toward the lowest feature index, then the lowest threshold;
    returns None when every feature is constant.
    """
    n = len(labels)
    total_pos = int(labels.sum())
    best_cost = None
    best: tuple[int, float] | None = None
    for j in range(features.shape[1]):
        column = features[:, j]
        order = np.argsort(column, kind="stable")
        values = column[order]
        cuts = np.nonzero(values[:-1] != values[1:])[0]
        if cuts.size == 0:
            continue
        left_pos = np.cumsum(labels[order])[cuts]
        left_n = cuts + 1.0
        right_n = n - left_n
        right_pos = total_pos - left_pos
        p_left = left_pos / left_n
        p_right = right_pos / right_n
        gini_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
        gini_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
        cost = (left_n * gini_left + right_n * gini_right) / n
        k = int(np.argmin(cost))  # first minimum = lowest threshold
        if best_cost is None or cost[k] < best_cost:
            best_cost = cost[k]
            i = cuts[k]
            best = (j, float((values[i] + values[i + 1]) / 2.0))
    return best


class DecisionTreeModel:
    kind = "decision_tree"

    def __init__(self, root: _Node, n_features: int, params: DecisionTreeParams):
        self.root = root
        self.n_features = n_features
        self.params = params

    def predict_score(self, rows: np.ndarray) -> np.ndarray:
        rows = _check_rows(rows, self.n_features)
        scores = np.empty(len(rows), dtype=float)
        self._route(rows, np.arange(len(rows)), self.root, scores)
        return scores

    def _route(self, rows, indices, node, out):
        if node.is_leaf:
            out[indices] = node.score
            return
        mask = rows[indices, node.feature] <= node.threshold
        self._route(rows, indices[mask], node.left, out)
        self._route(rows, indices[~mask], node.right, out)

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return self.predict_score(rows) >= 0.5

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "params": {
                "max_depth": self.params.max_depth,
                "min_samples_split": self.params.min_samples_split,
            },
            "n_features": self.n_features,
            "tree": self.root.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTreeModel":
        params = DecisionTreeParams(
            max_depth=data["params"]["max_depth"],
            min_samples_split=data["params"]["min_samples_split"],
        )
        return cls(_Node.from_dict(data["tree"]), data["n_features"], params)


def train_decision_tree(train: PreparedDataset,
                        params: DecisionTreeParams = DecisionTreeParams()) -> DecisionTreeModel:
    """Grow a binary CART tree by greedy Gini splits.

    Recursion stops at purity, min_samples_split, max_depth, or when no
    feature still varies within the node.  Zero-gain splits are allowed, so
    patterns like XOR are still separated at sufficient depth.
    """
    if len(train) == 0:
        raise ModelError("empty training set")
    features = np.asarray(train.features, dtype=float)
    labels = np.asarray(train.labels, dtype=bool)

    def grow(row_idx: np.ndarray, depth: int) -> _Node:
        y = labels[row_idx]
        n = len(y)
        pos = int(y.sum())
        leaf = _Node(score=pos / n, n_samples=n)
        if pos == 0 or pos == n or n < params.min_samples_split:
            return leaf
        if params.max_depth is not None and depth >= params.max_depth:
            return leaf
        found = _best_split(features[row_idx], y)
        if found is None:
            return leaf
        feature, threshold = found
        mask = features[row_idx, feature] <= threshold
        node = _Node(feature=feature, threshold=threshold, n_samples=n,
                     left=grow(row_idx[mask], depth + 1),
                     right=grow(row_idx[~mask], depth + 1))
        return node

    root = grow(np.arange(len(labels)), 0)
    return DecisionTreeModel(root, features.shape[1], params)


class GaussianNBModel:
    kind = "gaussian_nb"

    def __init__(self, log_prior_pos: float, log_prior_neg: float,
                 mean_pos: np.ndarray, mean_neg: np.ndarray,
                 var_pos: np.ndarray, var_neg: np.ndarray, params: GnbParams):
        self.log_prior_pos = log_prior_pos
        self.log_prior_neg = log_prior_neg
        self.mean_pos = mean_pos
        self.mean_neg = mean_neg
        self.var_pos = var_pos
        self.var_neg = var_neg
        self.params = params

    @property
    def n_features(self) -> int:
        return len(self.mean_pos)

    def _log_joint(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        def log_likelihood(mean, var):
            return -0.5 * np.sum(np.log(2.0 * np.pi * var) + (rows - mean) ** 2 / var, axis=1)

        return (self.log_prior_pos + log_likelihood(self.mean_pos, self.var_pos),
                self.log_prior_neg + log_likelihood(self.mean_neg, self.var_neg))

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        """Posterior probabilities, columns (negative, positive)."""
        rows = _check_rows(rows, self.n_features)
        joint_pos, joint_neg = self._log_joint(rows)
        shift = np.maximum(joint_pos, joint_neg)
        w_pos = np.exp(joint_pos - shift)
        w_neg = np.exp(joint_neg - shift)
        total = w_pos + w_neg
        return np.column_stack([w_neg / total, w_pos / total])

    def predict_score(self, rows: np.ndarray) -> np.ndarray:
        return self.predict_proba(rows)[:, 1]

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return self.predict_score(rows) >= 0.5

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "params": {"variance_floor_fraction": self.params.variance_floor_fraction},
            "n_features": self.n_features,
            "log_prior_pos": self.log_prior_pos,
            "log_prior_neg": self.log_prior_neg,
            "mean_pos": self.mean_pos.tolist(),
            "mean_neg": self.mean_neg.tolist(),
            "var_pos": self.var_pos.tolist(),
            "var_neg": self.var_neg.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianNBModel":
        return cls(
            log_prior_pos=data["log_prior_pos"],
            log_prior_neg=data["log_prior_neg"],
            mean_pos=np.array(data["mean_pos"]),
            mean_neg=np.array(data["mean_neg"]),
            var_pos=np.array(data["var_pos"]),
            var_neg=np.array(data["var_neg"]),
            params=GnbParams(**data["params"]),
        )


def train_gnb(train: PreparedDataset, params: GnbParams = GnbParams()) -> GaussianNBModel:
    """Fit class priors and per-feature class-conditional Gaussians.

    Every variance gets a floor of variance_floor_fraction times the
    largest per-feature variance of the whole training set, so constant
    features stay finite.  Both classes must be present.
    """
    if len(train) == 0:
        raise ModelError("empty training set")
    labels = np.asarray(train.labels, dtype=bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ModelError("priors degenerate: training data has a single class")

    features = np.asarray(train.features, dtype=float)
    max_var = float(np.var(features, axis=0).max())
    epsilon = params.variance_floor_fraction * (max_var if max_var > 0 else 1.0)

    pos = features[labels]
    neg = features[~labels]
    return GaussianNBModel(
        log_prior_pos=float(np.log(n_pos / len(labels))),
        log_prior_neg=float(np.log((len(labels) - n_pos) / len(labels))),
        mean_pos=pos.mean(axis=0),
        mean_neg=neg.mean(axis=0),
        var_pos=pos.var(axis=0) + epsilon,
        var_neg=neg.var(axis=0) + epsilon,
        params=params,
    )


TrainedModel = DecisionTreeModel | GaussianNBModel

MODEL_KINDS = {
    DecisionTreeModel.kind: DecisionTreeModel,
    GaussianNBModel.kind: GaussianNBModel,
}


def _check_rows(rows: np.ndarray, n_features: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != n_features:
        raise ModelError(
            f"expected rows with {n_features} features, got shape {rows.shape}")
    return rows


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    if data.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path}: not a {MODEL_FORMAT} file")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported model format version {data.get('version')}")
    kind = data.get("kind")
    if kind not in MODEL_KINDS:
        raise ModelError(f"{path}: unknown model kind {kind!r}")
    return MODEL_KINDS[kind].from_dict(data)
