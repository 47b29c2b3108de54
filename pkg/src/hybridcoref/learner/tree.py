"""Binary CART trees with Gini or entropy impurity.

Trees are grown into flat arrays (one entry per node) so that batch prediction
is a vectorised walk; :meth:`Tree.node` exposes the same structure as nested
:class:`TreeNode` objects.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..errors import EmptyTrainingSet

GINI = "gini"
ENTROPY = "entropy"
CRITERIA = (GINI, ENTROPY)

# low-cardinality categorical columns get subset splits
MAX_SUBSET_CODES = 12
LEAF = -1


def gini(p: np.ndarray | float) -> np.ndarray | float:
    """Two-class Gini impurity for positive fraction ``p``."""
    return 2.0 * p * (1.0 - p)


def entropy(p: np.ndarray | float) -> np.ndarray | float:
    """Two-class Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return h if h.ndim else float(h)


def impurity(labels, criterion: str = GINI) -> float:
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size == 0:
        return 0.0
    p = labels.mean()
    return float(gini(p) if criterion == GINI else entropy(p))


@dataclass
class TreeNode:
    """Nested view of one node; leaves have ``feature is None``."""

    value: float
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    categories: frozenset[int] | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def goes_left(self, x: np.ndarray) -> bool:
        if self.categories is not None:
            return int(x[self.feature]) in self.categories
        return x[self.feature] <= self.threshold

    def predict(self, x: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if node.goes_left(x) else node.right
        return node.value

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


class Tree:
    def __init__(self, feature, threshold, categories, left, right, value, n_samples):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.categories: list[frozenset[int] | None] = list(categories)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)
        width = 1 + max((max(c) for c in self.categories if c), default=0)
        self._is_cat = np.array([c is not None for c in self.categories], dtype=bool)
        self._cat_table = np.zeros((len(self.categories), width), dtype=bool)
        for i, c in enumerate(self.categories):
            if c:
                self._cat_table[i, sorted(c)] = True

    def __len__(self) -> int:
        return len(self.value)

    def node(self, i: int = 0) -> TreeNode:
        if self.feature[i] == LEAF:
            return TreeNode(float(self.value[i]), int(self.n_samples[i]))
        return TreeNode(
            float(self.value[i]), int(self.n_samples[i]), int(self.feature[i]),
            None if self.categories[i] is not None else float(self.threshold[i]),
            self.categories[i], self.node(int(self.left[i])), self.node(int(self.right[i])),
        )

    def depth(self) -> int:
        depth = np.zeros(len(self), dtype=np.int64)
        for i in range(len(self)):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[idx] != LEAF
        while active.any():
            r = rows[active]
            nodes = idx[r]
            feats = self.feature[nodes]
            vals = X[r, feats]
            go_left = vals <= self.threshold[nodes]
            is_cat = self._is_cat[nodes]
            if is_cat.any():
                codes = vals[is_cat].astype(np.int64)
                cat_nodes = nodes[is_cat]
                known = (codes >= 0) & (codes < self._cat_table.shape[1])
                res = np.zeros(len(codes), dtype=bool)
                res[known] = self._cat_table[cat_nodes[known], codes[known]]
                go_left[is_cat] = res
            idx[r] = np.where(go_left, self.left[nodes], self.right[nodes])
            active = self.feature[idx] != LEAF
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "categories": [sorted(c) if c is not None else None for c in self.categories],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        cats = [frozenset(c) if c is not None else None for c in d["categories"]]
        return cls(d["feature"], d["threshold"], cats, d["left"], d["right"], d["value"], d["n_samples"])


def _best_numeric(x: np.ndarray, y: np.ndarray, imp) -> tuple[float, float] | None:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    n = len(y)
    cpos = np.cumsum(ys)[:-1]
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    score = nl * imp(cpos / nl) + nr * imp((ys.sum() - cpos) / nr)
    score = np.where(valid, score, np.inf)
    i = int(np.argmin(score))
    thr = xs[i] + (xs[i + 1] - xs[i]) / 2.0
    if not xs[i] <= thr < xs[i + 1]:
        thr = xs[i]
    return float(score[i]), float(thr)


def _best_subset(x: np.ndarray, y: np.ndarray, n_codes: int, imp) -> tuple[float, frozenset[int]] | None:
    codes = x.astype(np.int64)
    counts = np.bincount(codes, minlength=n_codes)
    pos = np.bincount(codes, weights=y, minlength=n_codes)
    present = np.flatnonzero(counts)
    if len(present) < 2:
        return None
    # ordering codes by positive rate makes prefix splits optimal for two classes
    frac = pos[present] / counts[present]
    order = present[np.lexsort((present, frac))]
    c_n = np.cumsum(counts[order])[:-1].astype(np.float64)
    c_p = np.cumsum(pos[order])[:-1]
    n, total = float(len(y)), float(y.sum())
    score = c_n * imp(c_p / c_n) + (n - c_n) * imp((total - c_p) / (n - c_n))
    i = int(np.argmin(score))
    return float(score[i]), frozenset(int(c) for c in order[: i + 1])


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    criterion: str = GINI,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    categorical: Mapping[int, int] | None = None,
    min_samples_split: int = 2,
) -> Tree:
    """Grow a CART tree greedily.

    ``max_features`` columns are sampled per node (all when ``None``); if none
    of them admits a split the remaining columns are tried in random order.
    ``categorical`` maps column index to code count; columns with at most
    ``MAX_SUBSET_CODES`` codes are split by code subsets.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyTrainingSet("cannot grow a tree on zero examples")
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    imp = gini if criterion == GINI else entropy
    rng = rng if rng is not None else np.random.default_rng(0)
    n_features = X.shape[1]
    k = n_features if max_features is None else max(1, min(max_features, n_features))
    subset_cols = {c: n for c, n in (categorical or {}).items() if n <= MAX_SUBSET_CODES}

    feature, threshold, cats, left, right, value, nsamp = [], [], [], [], [], [], []

    def new_node(idx: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        cats.append(None)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        nsamp.append(len(idx))
        return len(value) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = len(idx)
        ys = y[idx]
        npos = ys.sum()
        if n < min_samples_split or npos == 0 or npos == n:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        best = None
        order = rng.permutation(n_features)
        for tried, col in enumerate(order):
            if tried >= k and best is not None:
                break
            xs = X[idx, col]
            if col in subset_cols:
                res = _best_subset(xs, ys, subset_cols[col], imp)
                if res is not None and (best is None or res[0] < best[0]):
                    best = (res[0], col, None, res[1])
            else:
                res = _best_numeric(xs, ys, imp)
                if res is not None and (best is None or res[0] < best[0]):
                    best = (res[0], col, res[1], None)
        if best is None:
            continue
        _, col, thr, subset = best
        xs = X[idx, col]
        if subset is not None:
            mask = np.isin(xs.astype(np.int64), np.fromiter(subset, dtype=np.int64))
        else:
            mask = xs <= thr
        if mask.all() or not mask.any():
            continue
        feature[node] = int(col)
        threshold[node] = float(thr) if thr is not None else 0.0
        cats[node] = subset
        li, ri = idx[mask], idx[~mask]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(feature, threshold, cats, left, right, value, nsamp)
