"""Random forest classifier with Gini trees.

Determinism contract: every tree draws its bootstrap sample and per-node
feature subsets from its own substream derived from (seed, tree_index), so
results do not depend on training order or thread scheduling, and a forest
grown with the same seed shares its first trees with any smaller forest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, ShapeError

FOREST_SCHEMA = "folkdsp-forest/1"


@dataclass
class TreeParams:
    features_per_split: int
    max_depth: int | None = None
    min_leaf_size: int = 1


@dataclass(frozen=True)
class DecisionTree:
    """Flattened binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # n_nodes x n_classes, filled at leaves

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_estimators: int
    features_per_split: int
    bootstrap_seed: int
    class_order: tuple
    n_features: int

    @property
    def n_classes(self) -> int:
        return len(self.class_order)


def gini(counts: np.ndarray) -> float:
    """Gini impurity 1 - sum(p^2) of a class-count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tree_index,)))


class _TreeBuilder:
    def __init__(self, X, y, n_classes, params: TreeParams, rng: np.random.Generator):
        self.X = X
        self.y = y
        self.n_classes = n_classes
        self.params = params
        self.rng = rng
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.counts = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(np.zeros(self.n_classes))
        return len(self.feature) - 1

    def _best_split(self, idx: np.ndarray):
        d = self.X.shape[1]
        k = min(self.params.features_per_split, d)
        candidates = self.rng.choice(d, size=k, replace=False)
        y_node = self.y[idx]
        n = len(idx)
        best = None  # (weighted_gini, feature, threshold)
        for f in candidates:
            vals = self.X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            sy = y_node[order]
            boundaries = np.nonzero(sv[1:] > sv[:-1])[0]
            if len(boundaries) == 0:
                continue
            onehot = np.zeros((n, self.n_classes))
            onehot[np.arange(n), sy] = 1.0
            cum = np.cumsum(onehot, axis=0)
            total = cum[-1]
            left_counts = cum[boundaries]
            right_counts = total - left_counts
            n_left = boundaries + 1
            n_right = n - n_left
            ok = (n_left >= self.params.min_leaf_size) & (n_right >= self.params.min_leaf_size)
            if not np.any(ok):
                continue
            gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
            gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
            weighted = (n_left * gini_left + n_right * gini_right) / n
            weighted = np.where(ok, weighted, np.inf)
            b = int(np.argmin(weighted))
            if best is None or weighted[b] < best[0]:
                best = (float(weighted[b]), int(f), float((sv[b] + sv[b + 1]) / 2.0))
        return best

    def build(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        counts = np.bincount(self.y[idx], minlength=self.n_classes).astype(np.float64)
        self.counts[node] = counts
        pure = np.max(counts) == counts.sum()
        depth_capped = self.params.max_depth is not None and depth >= self.params.max_depth
        if pure or depth_capped or len(idx) < 2 * self.params.min_leaf_size:
            return node
        best = self._best_split(idx)
        if best is None:
            return node
        _, f, t = best
        mask = self.X[idx, f] <= t
        self.feature[node] = f
        self.threshold[node] = t
        self.left[node] = self.build(idx[mask], depth + 1)
        self.right[node] = self.build(idx[~mask], depth + 1)
        return node

    def finish(self) -> DecisionTree:
        return DecisionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            counts=np.stack(self.counts),
        )


def fit_tree(X, y, params: TreeParams, rng: np.random.Generator, n_classes: int | None = None) -> DecisionTree:
    """Grow one Gini tree; thresholds are midpoints of consecutive distinct values."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ShapeError("X must be 2-D with one label per row")
    if len(y) < 1:
        raise ShapeError("need at least one training row")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    builder = _TreeBuilder(X, y, n_classes, params, rng)
    builder.build(np.arange(len(y)), depth=0)
    return builder.finish()


def tree_apply(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Leaf class-frequency distribution for each row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty((X.shape[0], tree.counts.shape[1]))
    for i, row in enumerate(X):
        node = 0
        while tree.feature[node] >= 0:
            node = tree.left[node] if row[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
        counts = tree.counts[node]
        out[i] = counts / counts.sum()
    return out


def _encode_labels(y, class_order=None):
    y = np.asarray(y)
    if class_order is None:
        class_order = tuple(sorted(set(y.tolist())))
    mapping = {c: i for i, c in enumerate(class_order)}
    try:
        encoded = np.array([mapping[v] for v in y.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise ShapeError(f"label {exc.args[0]!r} not in class_order") from None
    return encoded, tuple(class_order)


def fit_forest(
    X,
    y,
    n_estimators: int = 64,
    seed: int = 0,
    features_per_split: int | None = None,
    max_depth: int | None = None,
    min_leaf_size: int = 1,
    bootstrap: bool = True,
    class_order=None,
) -> ForestModel:
    """Train `n_estimators` trees on bootstrap samples; deterministic given seed."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError("X must be 2-D")
    encoded, class_order = _encode_labels(y, class_order)
    if len(encoded) != X.shape[0]:
        raise ShapeError("one label per row required")
    if n_estimators < 1:
        raise ShapeError("n_estimators must be >= 1")
    if features_per_split is None:
        features_per_split = max(1, int(np.sqrt(X.shape[1])))
    params = TreeParams(features_per_split=features_per_split, max_depth=max_depth, min_leaf_size=min_leaf_size)
    n = X.shape[0]
    trees = []
    for i in range(n_estimators):
        rng = _tree_rng(seed, i)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X[rows], encoded[rows], params, rng, n_classes=len(class_order)))
    return ForestModel(
        trees=tuple(trees),
        n_estimators=n_estimators,
        features_per_split=features_per_split,
        bootstrap_seed=seed,
        class_order=class_order,
        n_features=X.shape[1],
    )


def predict_proba(model: ForestModel, X) -> np.ndarray:
    """Mean of per-tree leaf class frequencies; rows sum to 1."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ShapeError("inputs must be finite")
    probs = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        probs += tree_apply(tree, X)
    return probs / len(model.trees)


def predict(model: ForestModel, X):
    """Predicted class per row; ties broken by class_order position."""
    probs = predict_proba(model, X)
    idx = np.argmax(probs, axis=1)
    return np.array([model.class_order[i] for i in idx], dtype=object), probs


@dataclass(frozen=True)
class SweepRow:
    n_estimators: int
    train_error: float
    validation_error: float


def complexity_sweep(X, y, estimator_counts, validation_fraction: float = 0.2, seed: int = 0):
    """Train/validation error for each estimator count on one fixed split.

    The split is stratified and seeded; all forests share the same base seed,
    so a larger forest extends a smaller one tree-for-tree.
    """
    if not estimator_counts:
        raise ShapeError("estimator_counts must be nonempty")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5EED,)))
    train_idx, val_idx = [], []
    for cls in sorted(set(y.tolist())):
        idx = np.nonzero(y == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        n_val = max(1, round(validation_fraction * len(idx)))
        val_idx.extend(idx[:n_val])
        train_idx.extend(idx[n_val:])
    train_idx = np.array(sorted(train_idx))
    val_idx = np.array(sorted(val_idx))

    rows = []
    for count in estimator_counts:
        model = fit_forest(X[train_idx], y[train_idx], n_estimators=int(count), seed=seed)
        pred_train, _ = predict(model, X[train_idx])
        pred_val, _ = predict(model, X[val_idx])
        rows.append(
            SweepRow(
                n_estimators=int(count),
                train_error=float(np.mean(pred_train != y[train_idx])),
                validation_error=float(np.mean(pred_val != y[val_idx])),
            )
        )
    return rows


def forest_to_json(model: ForestModel, extra: dict | None = None) -> dict:
    doc = {
        "schema": FOREST_SCHEMA,
        "class_order": list(model.class_order),
        "params": {
            "n_estimators": model.n_estimators,
            "features_per_split": model.features_per_split,
            "bootstrap_seed": model.bootstrap_seed,
            "n_features": model.n_features,
        },
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "counts": t.counts.tolist(),
            }
            for t in model.trees
        ],
    }
    if extra:
        doc["extra"] = extra
    return doc


def forest_from_json(doc: dict) -> tuple[ForestModel, dict]:
    if doc.get("schema") != FOREST_SCHEMA:
        raise SchemaError(f"unknown forest schema {doc.get('schema')!r}")
    trees = tuple(
        DecisionTree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            counts=np.array(t["counts"], dtype=np.float64),
        )
        for t in doc["trees"]
    )
    params = doc["params"]
    model = ForestModel(
        trees=trees,
        n_estimators=int(params["n_estimators"]),
        features_per_split=int(params["features_per_split"]),
        bootstrap_seed=int(params["bootstrap_seed"]),
        class_order=tuple(doc["class_order"]),
        n_features=int(params["n_features"]),
    )
    return model, doc.get("extra", {})


def save_forest(model: ForestModel, path, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_json(model, extra), fh, sort_keys=True)


def load_forest(path) -> tuple[ForestModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return forest_from_json(json.load(fh))
