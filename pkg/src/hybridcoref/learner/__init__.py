from .forest import (
    ForestModel,
    GridPoint,
    LinearModel,
    check_mode,
    load_model,
    loads_model,
    dumps_model,
    predict_proba,
    save_model,
    train_forest,
    train_logistic,
)
from .sampling import PreparedDocument, TrainingExample, build_training_set, labels, sample_pairs
from .selection import GridSpec, cross_validate, grid_search, grid_table_csv, read_grid_table
from .tree import Tree, TreeNode, entropy, gini, impurity, train_tree

__all__ = [
    "ForestModel", "GridPoint", "GridSpec", "LinearModel", "PreparedDocument", "TrainingExample",
    "Tree", "TreeNode", "build_training_set", "check_mode", "cross_validate", "dumps_model",
    "entropy", "gini", "grid_search", "grid_table_csv", "impurity", "labels", "load_model",
    "loads_model", "predict_proba", "read_grid_table", "sample_pairs", "save_model",
    "train_forest", "train_logistic", "train_tree",
]
