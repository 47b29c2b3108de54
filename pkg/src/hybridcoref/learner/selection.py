"""Document-level k-fold cross-validation and the random-forest grid search."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import TooFewDocuments
from ..features import FeatureSpace
from .forest import GridPoint, train_forest
from .sampling import TrainingExample, labels

DEPTHS: tuple[int | None, ...] = (None, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
ESTIMATORS = (100, 200, 500, 1000)
CRITERIA_GRID = ("gini", "entropy")


@dataclass(frozen=True)
class GridSpec:
    max_depth: tuple[int | None, ...] = DEPTHS
    n_estimators: tuple[int, ...] = ESTIMATORS
    criterion: tuple[str, ...] = CRITERIA_GRID

    def points(self) -> list[GridPoint]:
        return [GridPoint(d, n, c) for d, n, c in itertools.product(self.max_depth, self.n_estimators, self.criterion)]


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class FoldResult:
    repeat: int
    fold: int
    test_docs: tuple[str, ...]
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def scores(self) -> tuple[float, float, float]:
        return prf(self.tp, self.fp, self.fn)


@dataclass
class CVResult:
    folds: list[FoldResult]

    @property
    def precision(self) -> float:
        return float(np.mean([f.scores[0] for f in self.folds]))

    @property
    def recall(self) -> float:
        return float(np.mean([f.scores[1] for f in self.folds]))

    @property
    def f1(self) -> float:
        return float(np.mean([f.scores[2] for f in self.folds]))


def document_folds(doc_ids: Sequence[str], k: int, rng: np.random.Generator) -> list[list[str]]:
    """Shuffle distinct documents and cut them into ``k`` folds differing by at most one."""
    docs = sorted(set(doc_ids))
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(docs) < k:
        raise TooFewDocuments(f"{len(docs)} documents cannot fill {k} folds")
    perm = rng.permutation(len(docs))
    return [[docs[i] for i in chunk] for chunk in np.array_split(perm, k)]


Trainer = Callable[[np.ndarray, np.ndarray, FeatureSpace, int], object]


def forest_trainer(point: GridPoint) -> Trainer:
    def fit(X, y, space, seed):
        return train_forest(X, y, point, space, seed)

    return fit


def cross_validate(
    examples: Sequence[TrainingExample],
    point: GridPoint,
    k: int = 10,
    repeats: int = 1,
    seed: int = 0,
    space: FeatureSpace | None = None,
    trainer: Trainer | None = None,
) -> CVResult:
    """Classifier-level P/R/F1 on the positive class, folds split by document.

    ``space`` supplies mode and embedding width; codebooks are refit on each
    training fold.
    """
    if space is None:
        space = FeatureSpace(examples[0].features.mode)
    trainer = trainer or forest_trainer(point)
    rng = np.random.default_rng(seed)
    doc_of = [e.doc_id for e in examples]
    y_all = labels(examples)
    out = []
    for rep in range(repeats):
        for fi, test_docs in enumerate(document_folds(doc_of, k, rng)):
            test_set = set(test_docs)
            tr = [i for i, d in enumerate(doc_of) if d not in test_set]
            te = [i for i, d in enumerate(doc_of) if d in test_set]
            fold_space = FeatureSpace(space.mode, space.embedding_dim).fit(examples[i].features for i in tr)
            Xtr = fold_space.transform([examples[i].features for i in tr])
            model = trainer(Xtr, y_all[tr], fold_space, seed + 7919 * rep + fi)
            if te:
                pred = model.predict_matrix(fold_space.transform([examples[i].features for i in te])) >= 0.5
            else:
                pred = np.zeros(0, dtype=bool)
            gold = y_all[te] == 1.0
            out.append(FoldResult(
                rep, fi, tuple(sorted(test_docs)),
                int(np.sum(pred & gold)), int(np.sum(pred & ~gold)),
                int(np.sum(~pred & gold)), int(np.sum(~pred & ~gold)),
            ))
    return CVResult(out)


@dataclass
class GridRow:
    point: GridPoint
    precision: float
    recall: float
    f1: float


def _tie_key(row: GridRow) -> tuple:
    depth = row.point.max_depth if row.point.max_depth is not None else float("inf")
    return (-row.f1, row.point.n_estimators, depth, 0 if row.point.criterion == "gini" else 1)


def best_row(rows: Sequence[GridRow]) -> GridRow:
    """Highest mean F1; ties go to fewer trees, then shallower depth, then Gini."""
    return min(rows, key=_tie_key)


def grid_search(
    examples: Sequence[TrainingExample],
    grid: GridSpec = GridSpec(),
    k: int = 10,
    seed: int = 0,
    space: FeatureSpace | None = None,
    repeats: int = 1,
    progress: Callable[[GridRow], None] | None = None,
) -> tuple[GridPoint, list[GridRow]]:
    rows = []
    for point in grid.points():
        cv = cross_validate(examples, point, k, repeats, seed, space)
        row = GridRow(point, cv.precision, cv.recall, cv.f1)
        rows.append(row)
        if progress:
            progress(row)
    return best_row(rows).point, rows


def grid_table_csv(rows: Sequence[GridRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["max_depth", "n_estimators", "criterion", "precision", "recall", "f1"])
    for r in rows:
        w.writerow([
            "None" if r.point.max_depth is None else r.point.max_depth,
            r.point.n_estimators, r.point.criterion,
            repr(r.precision), repr(r.recall), repr(r.f1),
        ])
    return buf.getvalue()


def read_grid_table(text: str) -> list[GridRow]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        depth = None if rec["max_depth"] == "None" else int(rec["max_depth"])
        rows.append(GridRow(GridPoint(depth, int(rec["n_estimators"]), rec["criterion"]),
                            float(rec["precision"]), float(rec["recall"]), float(rec["f1"])))
    return rows
