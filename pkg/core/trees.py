"""CART trees, random forest and gradient boosting on logistic loss"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from utils.errors import DimensionMismatch, InvalidHyperparameter
from utils.seeding import make_rng
from .linear import binary_proba, check_training_data, sigmoid

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass
class DecisionTree:
    """
    Flat binary tree; rows go left when x[feature] <= threshold

    Leaves have feature == -1 and carry `value`: the takeoff frequency
    for classification trees, the additive score for boosting trees.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if self.n_nodes else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row"""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feature = self.feature[node]
            internal = feature != LEAF
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X[r, feature[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_parameters(self) -> dict:
        return {
            'feature': self.feature,
            'threshold': self.threshold,
            'left': self.left,
            'right': self.right,
            'value': self.value,
        }

    @classmethod
    def from_parameters(cls, params: dict) -> "DecisionTree":
        as_int = lambda k: np.asarray(params[k]).astype(np.int64)
        return cls(
            feature=as_int('feature'),
            threshold=np.asarray(params['threshold'], dtype=np.float64),
            left=as_int('left'),
            right=as_int('right'),
            value=np.asarray(params['value'], dtype=np.float64),
        )


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _candidate_splits(x_sorted: np.ndarray, min_leaf: int) -> np.ndarray:
    """Mask of split positions i (between sorted rows i and i+1) that are allowed"""
    m = x_sorted.shape[0]
    n_left = np.arange(1, m)[:, None]
    distinct = x_sorted[1:] > x_sorted[:-1]
    return distinct & (n_left >= min_leaf) & (m - n_left >= min_leaf)


def best_gini_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float, float]]:
    """
    Best (feature, threshold) by Gini impurity reduction

    Thresholds are midpoints between consecutive distinct values. Ties go
    to the lowest feature index, then the lowest threshold.

    Returns:
        (feature, threshold, gain) or None when no split reduces impurity
    """
    m = len(y)
    if m < 2 * min_leaf:
        return None
    columns = X[:, features]
    order = np.argsort(columns, axis=0, kind='stable')
    x_sorted = np.take_along_axis(columns, order, axis=0)
    left_pos = np.cumsum(y[order], axis=0)[:-1].astype(np.float64)
    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    total_pos = float(y.sum())

    parent = 2.0 * (total_pos / m) * (1.0 - total_pos / m)
    children = (n_left * _gini(left_pos, n_left) + n_right * _gini(total_pos - left_pos, n_right)) / m
    gain = np.where(_candidate_splits(x_sorted, min_leaf), parent - children, -np.inf)
    return _pick(gain, x_sorted, features)


def best_variance_split(X: np.ndarray, r: np.ndarray, features: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float, float]]:
    """Best split of real-valued targets by squared-error reduction"""
    m = len(r)
    if m < 2 * min_leaf:
        return None
    columns = X[:, features]
    order = np.argsort(columns, axis=0, kind='stable')
    x_sorted = np.take_along_axis(columns, order, axis=0)
    left_sum = np.cumsum(r[order], axis=0)[:-1]
    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    total = float(r.sum())

    gain = left_sum ** 2 / n_left + (total - left_sum) ** 2 / n_right - total ** 2 / m
    gain = np.where(_candidate_splits(x_sorted, min_leaf), gain, -np.inf)
    return _pick(gain, x_sorted, features)


def _pick(gain: np.ndarray, x_sorted: np.ndarray, features: np.ndarray):
    # feature-major flattening so argmax's first hit is lowest feature, then lowest threshold
    order = np.argsort(features, kind='stable')
    flat = gain[:, order].T.ravel()
    best = int(np.argmax(flat))
    if not flat[best] > 1e-12:
        return None
    column, position = divmod(best, gain.shape[0])
    j = order[column]
    threshold = 0.5 * (x_sorted[position, j] + x_sorted[position + 1, j])
    return int(features[j]), float(threshold), float(flat[best])


class _TreeBuilder:
    """Depth-first grower writing nodes into flat lists"""

    def __init__(self, splitter, leaf_value, max_depth, min_leaf, n_features, rng):
        self.splitter = splitter
        self.leaf_value = leaf_value
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_features = n_features
        self.rng = rng
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def _features(self, d: int) -> np.ndarray:
        if self.n_features >= d or self.rng is None:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=self.n_features, replace=False))

    def _add(self, value: float) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.feature) - 1

    def grow(self, X: np.ndarray, target: np.ndarray, idx: np.ndarray, depth: int) -> int:
        node = self._add(self.leaf_value(idx))
        if self.max_depth is not None and depth >= self.max_depth:
            return node
        split = self.splitter(X[idx], target[idx], self._features(X.shape[1]), self.min_leaf)
        if split is None:
            return node
        feature, threshold, _ = split
        go_left = X[idx, feature] <= threshold
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self.grow(X, target, idx[go_left], depth + 1)
        self.right[node] = self.grow(X, target, idx[~go_left], depth + 1)
        return node

    def build(self) -> DecisionTree:
        return DecisionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
        )


def _check_tree_hyper(max_depth: Optional[int], min_leaf: int):
    if max_depth is not None and max_depth < 0:
        raise InvalidHyperparameter(f"max_depth must be >= 0, got {max_depth}")
    if min_leaf < 1:
        raise InvalidHyperparameter(f"min_leaf must be >= 1, got {min_leaf}")


def grow_classification_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: Optional[int] = None,
    min_leaf: int = 1,
    n_features: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> DecisionTree:
    y = y.astype(np.float64)
    builder = _TreeBuilder(
        splitter=best_gini_split,
        leaf_value=lambda idx: float(y[idx].mean()),
        max_depth=max_depth,
        min_leaf=min_leaf,
        n_features=n_features or X.shape[1],
        rng=rng,
    )
    builder.grow(X, y, np.arange(len(y)), 0)
    return builder.build()


@dataclass
class TreeClassifierModel:
    tree: DecisionTree

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return binary_proba(self.tree.predict_value(_check_features(X, self.tree)))

    def to_parameters(self) -> dict:
        return {'tree': self.tree.to_parameters()}

    @classmethod
    def from_parameters(cls, params: dict) -> "TreeClassifierModel":
        return cls(tree=DecisionTree.from_parameters(params['tree']))


def _check_features(X: np.ndarray, tree: DecisionTree) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"Expected a 2-D feature matrix, got shape {X.shape}")
    used = tree.feature[tree.feature != LEAF]
    if used.size and used.max() >= X.shape[1]:
        raise DimensionMismatch(f"Tree splits on feature {used.max()} but input has {X.shape[1]} columns")
    return X


def train_dtree(X: np.ndarray, y: np.ndarray, max_depth: Optional[int] = None, min_leaf: int = 1) -> TreeClassifierModel:
    """
    Greedy CART on Gini impurity

    Args:
        X: Training matrix
        y: 0/1 labels
        max_depth: Depth limit (None grows until pure); 0 gives a single prior leaf
        min_leaf: Minimum rows per child

    Returns:
        TreeClassifierModel whose leaves hold class frequencies
    """
    X, y = check_training_data(X, y)
    _check_tree_hyper(max_depth, min_leaf)
    tree = grow_classification_tree(X, y, max_depth, min_leaf)
    logger.debug("dtree: %d nodes, depth %d", tree.n_nodes, tree.depth)
    return TreeClassifierModel(tree=tree)


def resolve_feature_count(feature_frac: Union[str, float], d: int) -> int:
    """Features examined per node: ceil(sqrt(d)) for 'sqrt', else ceil(frac * d)"""
    if feature_frac == 'sqrt':
        return max(1, math.ceil(math.sqrt(d)))
    frac = float(feature_frac)
    if not 0.0 < frac <= 1.0:
        raise InvalidHyperparameter(f"feature_frac must be 'sqrt' or in (0, 1], got {feature_frac}")
    return max(1, math.ceil(frac * d))


@dataclass
class RandomForestModel:
    trees: List[DecisionTree]
    oob_score: Optional[float] = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict_value(_check_features(X, tree))
        return binary_proba(votes / len(self.trees))

    def to_parameters(self) -> dict:
        return {
            'trees': [t.to_parameters() for t in self.trees],
            'oob_score': self.oob_score,
        }

    @classmethod
    def from_parameters(cls, params: dict) -> "RandomForestModel":
        oob = params.get('oob_score')
        return cls(
            trees=[DecisionTree.from_parameters(p) for p in params['trees']],
            oob_score=None if oob is None else float(oob),
        )


def train_rforest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: Optional[int] = None,
    min_leaf: int = 1,
    feature_frac: Union[str, float] = 'sqrt',
    bootstrap: bool = True,
    seed: int = 42,
) -> RandomForestModel:
    """
    Bagged CART ensemble with per-node feature sampling

    Tree t draws its bootstrap sample and feature subsets from the stream
    make_rng(seed, "rforest", t), so trees are independent of build order.

    Args:
        X: Training matrix
        y: 0/1 labels
        n_trees: Number of trees
        max_depth: Per-tree depth limit
        min_leaf: Minimum rows per child
        feature_frac: 'sqrt' or a fraction of the feature count
        bootstrap: Resample rows with replacement per tree
        seed: Run seed

    Returns:
        RandomForestModel with out-of-bag accuracy when bootstrapping
    """
    X, y = check_training_data(X, y)
    _check_tree_hyper(max_depth, min_leaf)
    if n_trees < 1:
        raise InvalidHyperparameter(f"n_trees must be >= 1, got {n_trees}")
    n, d = X.shape
    n_features = resolve_feature_count(feature_frac, d)

    trees = []
    oob_sum = np.zeros(n)
    oob_count = np.zeros(n)
    for t in range(n_trees):
        rng = make_rng(seed, 'rforest', t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree = grow_classification_tree(
            X[rows], y[rows], max_depth, min_leaf, n_features, rng if n_features < d else None
        )
        trees.append(tree)
        if bootstrap:
            out = np.setdiff1d(np.arange(n), rows)
            if out.size:
                oob_sum[out] += tree.predict_value(X[out])
                oob_count[out] += 1

    oob_score = None
    seen = oob_count > 0
    if bootstrap and seen.any():
        oob_pred = (oob_sum[seen] / oob_count[seen] > 0.5).astype(np.int64)
        oob_score = float(np.mean(oob_pred == y[seen]))
        logger.debug("rforest: OOB accuracy %.4f on %d rows", oob_score, int(seen.sum()))
    return RandomForestModel(trees=trees, oob_score=oob_score)


@dataclass
class GradientBoostingModel:
    init_score: float
    learning_rate: float
    trees: List[DecisionTree]
    loss_trace: List[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        score = np.full(X.shape[0], self.init_score)
        for tree in self.trees:
            score += self.learning_rate * tree.predict_value(_check_features(X, tree))
        return score

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return binary_proba(sigmoid(self.decision_function(X)))

    def to_parameters(self) -> dict:
        return {
            'init_score': self.init_score,
            'learning_rate': self.learning_rate,
            'trees': [t.to_parameters() for t in self.trees],
        }

    @classmethod
    def from_parameters(cls, params: dict) -> "GradientBoostingModel":
        return cls(
            init_score=float(params['init_score']),
            learning_rate=float(params['learning_rate']),
            trees=[DecisionTree.from_parameters(p) for p in params['trees']],
        )


def _log_loss(y: np.ndarray, score: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, score) - y * score))


def train_gboost(
    X: np.ndarray,
    y: np.ndarray,
    n_rounds: int = 100,
    lr: float = 0.1,
    depth: int = 3,
    min_leaf: int = 1,
) -> GradientBoostingModel:
    """
    Gradient boosting of regression trees on logistic loss

    Starts from the log-odds of the training prior. Each round fits a
    depth-limited tree to the residuals y - sigmoid(F) by squared error,
    then sets every leaf to sum(residual) / sum(p * (1 - p)) over its rows.

    Args:
        X: Training matrix
        y: 0/1 labels
        n_rounds: Boosting rounds (0 keeps the prior)
        lr: Shrinkage
        depth: Tree depth
        min_leaf: Minimum rows per leaf

    Returns:
        GradientBoostingModel with the per-round training log loss
    """
    X, y = check_training_data(X, y)
    _check_tree_hyper(depth, min_leaf)
    if n_rounds < 0 or lr <= 0:
        raise InvalidHyperparameter(f"gboost needs n_rounds >= 0, lr > 0 (got {n_rounds}, {lr})")
    yf = y.astype(np.float64)
    prior = float(np.clip(yf.mean(), 1e-6, 1.0 - 1e-6))
    init_score = math.log(prior / (1.0 - prior))

    score = np.full(len(y), init_score)
    trees = []
    trace = [_log_loss(yf, score)]
    for _ in range(n_rounds):
        p = sigmoid(score)
        residual = yf - p
        hessian = p * (1.0 - p)

        def newton_leaf(idx, residual=residual, hessian=hessian):
            denominator = float(hessian[idx].sum())
            return float(residual[idx].sum()) / denominator if denominator > 1e-12 else 0.0

        builder = _TreeBuilder(best_variance_split, newton_leaf, depth, min_leaf, X.shape[1], None)
        builder.grow(X, residual, np.arange(len(y)), 0)
        tree = builder.build()
        trees.append(tree)
        score = score + lr * tree.predict_value(X)
        trace.append(_log_loss(yf, score))
    if n_rounds:
        logger.debug("gboost: log loss %.6f -> %.6f over %d rounds", trace[0], trace[-1], n_rounds)
    return GradientBoostingModel(init_score=init_score, learning_rate=lr, trees=trees, loss_trace=trace)
