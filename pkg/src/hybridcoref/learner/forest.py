"""Bagged forests of CART trees and the logistic-regression baseline."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyTrainingSet, ModelModeMismatch, VocabMismatch
from ..features import FeatureSpace, FeatureVector, Mode
from .tree import CRITERIA, GINI, Tree, train_tree

MODEL_FORMAT = "hybridcoref-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GridPoint:
    max_depth: int | None = None
    n_estimators: int = 100
    criterion: str = GINI

    def __post_init__(self) -> None:
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive or None")

    def label(self) -> str:
        return f"depth={self.max_depth} trees={self.n_estimators} {self.criterion}"


def tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent per-tree seed sequences, drawn up front so order never matters."""
    return np.random.SeedSequence(seed).spawn(n)


@dataclass
class ForestModel:
    trees: list[Tree]
    point: GridPoint
    space: FeatureSpace
    merge_threshold: float = 0.5
    # pipeline settings recorded at training time (sieves, clusters, ...)
    meta: dict = field(default_factory=dict)
    kind: str = field(default="forest", init=False)

    @property
    def n_estimators(self) -> int:
        return len(self.trees)

    @property
    def mode(self) -> Mode:
        return self.space.mode

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.space.n_columns:
            raise VocabMismatch(f"expected {self.space.n_columns} columns, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def predict_vectors(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        if not vectors:
            return np.zeros(0)
        return self.predict_matrix(self.space.transform(vectors))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "hyper": {
                "max_depth": self.point.max_depth,
                "n_estimators": self.point.n_estimators,
                "criterion": self.point.criterion,
            },
            "merge_threshold": self.merge_threshold,
            "meta": self.meta,
            "space": self.space.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
        }


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    point: GridPoint,
    space: FeatureSpace,
    seed: int = 0,
    merge_threshold: float = 0.5,
    max_features: int | str | None = "sqrt",
) -> ForestModel:
    """Fit ``point.n_estimators`` trees, each on a same-size bootstrap resample."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise EmptyTrainingSet("no training examples")
    if max_features == "sqrt":
        max_features = max(1, int(math.sqrt(X.shape[1])))
    cat = space.categorical_columns
    trees = []
    for ss in tree_seeds(seed, point.n_estimators):
        rng = np.random.Generator(np.random.PCG64(ss))
        idx = rng.integers(0, n, size=n)
        trees.append(train_tree(X[idx], y[idx], point.max_depth, point.criterion, max_features, rng, cat))
    return ForestModel(trees, point, space, merge_threshold)


def predict_proba(model, fv: FeatureVector) -> float:
    """Link probability of one pair: the mean positive fraction over trees."""
    if fv.mode is not model.space.mode:
        raise VocabMismatch(f"vector built in {fv.mode.value} mode, model expects {model.space.mode.value}")
    return float(model.predict_vectors([fv])[0])


# --------------------------------------------------------------------------
# logistic regression


def logistic_loss_and_grad(w: np.ndarray, b: float, Z: np.ndarray, y: np.ndarray, l2: float):
    """Mean log-loss plus ``l2/2 * |w|^2`` and its gradient with respect to (w, b)."""
    z = Z @ w + b
    p = 1.0 / (1.0 + np.exp(-z))
    eps = 1e-15
    loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)) + 0.5 * l2 * float(w @ w)
    r = (p - y) / len(y)
    return loss, Z.T @ r + l2 * w, float(r.sum())


@dataclass
class LinearModel:
    space: FeatureSpace
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    merge_threshold: float = 0.5
    meta: dict = field(default_factory=dict)
    kind: str = field(default="logistic", init=False)

    @property
    def mode(self) -> Mode:
        return self.space.mode

    def design(self, X: np.ndarray) -> np.ndarray:
        return _design(X, self.space, self.mean, self.scale)

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.space.n_columns:
            raise VocabMismatch(f"expected {self.space.n_columns} columns, got {X.shape[1]}")
        z = self.design(X) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def predict_vectors(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        if not vectors:
            return np.zeros(0)
        return self.predict_matrix(self.space.transform(vectors))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "merge_threshold": self.merge_threshold,
            "meta": self.meta,
            "space": self.space.to_dict(),
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
        }


def _design(X: np.ndarray, space: FeatureSpace, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Standardised numeric columns followed by one-hot categorical blocks."""
    cat = space.categorical_columns
    num_cols = [c for c in range(X.shape[1]) if c not in cat]
    parts = [(X[:, num_cols] - mean) / scale]
    for c, n_codes in sorted(cat.items()):
        codes = X[:, c].astype(np.int64)
        block = np.zeros((X.shape[0], n_codes))
        ok = (codes >= 0) & (codes < n_codes)
        block[np.flatnonzero(ok), codes[ok]] = 1.0
        parts.append(block)
    return np.hstack(parts)


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    space: FeatureSpace,
    l2: float = 1e-3,
    epochs: int = 500,
    lr: float = 0.5,
    seed: int = 0,
    merge_threshold: float = 0.5,
) -> LinearModel:
    """Full-batch gradient descent from zero weights.

    ``seed`` is accepted for interface symmetry; the fit itself is deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyTrainingSet("no training examples")
    cat = space.categorical_columns
    num_cols = [c for c in range(X.shape[1]) if c not in cat]
    mean = X[:, num_cols].mean(axis=0)
    scale = X[:, num_cols].std(axis=0)
    scale[scale == 0] = 1.0
    Z = _design(X, space, mean, scale)
    w = np.zeros(Z.shape[1])
    b = 0.0
    for _ in range(epochs):
        _, gw, gb = logistic_loss_and_grad(w, b, Z, y, l2)
        w -= lr * gw
        b -= lr * gb
    return LinearModel(space, w, b, mean, scale, merge_threshold)


# --------------------------------------------------------------------------
# persistence


def dumps_model(model) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model) + "\n", encoding="utf-8")


def loads_model(text: str):
    d = json.loads(text)
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a hybridcoref model file")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')}")
    space = FeatureSpace.from_dict(d["space"])
    if d["kind"] == "forest":
        h = d["hyper"]
        point = GridPoint(h["max_depth"], h["n_estimators"], h["criterion"])
        return ForestModel([Tree.from_dict(t) for t in d["trees"]], point, space, d["merge_threshold"],
                           d.get("meta", {}))
    if d["kind"] == "logistic":
        return LinearModel(space, np.asarray(d["weights"]), d["bias"], np.asarray(d["mean"]),
                           np.asarray(d["scale"]), d["merge_threshold"], d.get("meta", {}))
    raise ValueError(f"unknown model kind {d['kind']!r}")


def load_model(path: str | Path):
    return loads_model(Path(path).read_text(encoding="utf-8"))


def check_mode(model, mode: Mode) -> None:
    if model.mode is not mode:
        raise ModelModeMismatch(f"model trained in {model.mode.value} mode, config asks for {mode.value}")
