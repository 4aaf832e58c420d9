import numpy as np
import pytest

from core.trees import (
    LEAF,
    GradientBoostingModel,
    RandomForestModel,
    best_gini_split,
    resolve_feature_count,
    train_dtree,
    train_gboost,
    train_rforest,
)
from utils.errors import InvalidHyperparameter


@pytest.fixture
def blobs():
    rng = np.random.default_rng(11)
    X = np.vstack([rng.normal(-2.0, 0.7, (20, 3)), rng.normal(2.0, 0.7, (20, 3))])
    y = np.array([0] * 20 + [1] * 20)
    return X, y


class TestDecisionTree:
    def test_pure_node_is_leaf(self):
        model = train_dtree(np.array([[0.0], [1.0], [2.0]]), np.array([1, 1, 1]))
        assert model.tree.n_nodes == 1
        np.testing.assert_allclose(model.predict_proba(np.array([[5.0]])), [[0.0, 1.0]])

    def test_midpoint_threshold(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        model = train_dtree(X, np.array([0, 0, 1, 1]))
        assert model.tree.feature[0] == 0
        assert model.tree.threshold[0] == 1.5
        np.testing.assert_array_equal(np.argmax(model.predict_proba(X), axis=1), [0, 0, 1, 1])

    def test_depth_zero_gives_prior(self):
        model = train_dtree(np.array([[0.0], [1.0], [2.0], [3.0]]), np.array([0, 1, 1, 1]), max_depth=0)
        assert model.tree.n_nodes == 1
        np.testing.assert_allclose(model.predict_proba(np.array([[9.0]])), [[0.25, 0.75]])

    def test_ties_go_to_lowest_feature(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        model = train_dtree(X, np.array([0, 0, 1, 1]))
        assert model.tree.feature[0] == 0

    def test_split_search_returns_none_without_gain(self):
        X = np.array([[1.0], [1.0], [1.0]])
        assert best_gini_split(X, np.array([0, 1, 0]), np.array([0]), 1) is None

    def test_min_leaf_respected(self, blobs):
        X, y = blobs
        tree = train_dtree(X, y, min_leaf=5).tree
        leaves = tree.apply(X)
        counts = np.bincount(leaves, minlength=tree.n_nodes)[tree.feature == LEAF]
        assert counts.min() >= 5

    def test_invalid_depth(self, blobs):
        X, y = blobs
        with pytest.raises(InvalidHyperparameter):
            train_dtree(X, y, max_depth=-1)


class TestRandomForest:
    def test_reduces_to_single_tree(self, blobs):
        X, y = blobs
        single = train_dtree(X, y).tree
        forest = train_rforest(X, y, n_trees=3, feature_frac=1.0, bootstrap=False)
        for tree in forest.trees:
            np.testing.assert_array_equal(tree.feature, single.feature)
            np.testing.assert_array_equal(tree.threshold, single.threshold)
        assert forest.oob_score is None

    def test_same_seed_same_forest(self, blobs):
        X, y = blobs
        a = train_rforest(X, y, n_trees=5, seed=3)
        b = train_rforest(X, y, n_trees=5, seed=3)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))

    def test_oob_close_to_tree_accuracy(self, blobs):
        X, y = blobs
        forest = train_rforest(X, y, n_trees=25, seed=1)
        tree_acc = np.mean(np.argmax(train_dtree(X, y).predict_proba(X), axis=1) == y)
        assert forest.oob_score is not None
        assert forest.oob_score >= tree_acc - 0.1

    def test_parameters_round_trip(self, blobs):
        X, y = blobs
        forest = train_rforest(X, y, n_trees=4, seed=2)
        back = RandomForestModel.from_parameters(forest.to_parameters())
        np.testing.assert_array_equal(back.predict_proba(X), forest.predict_proba(X))

    def test_feature_count(self):
        assert resolve_feature_count('sqrt', 256) == 16
        assert resolve_feature_count('sqrt', 10) == 4
        assert resolve_feature_count(0.5, 9) == 5
        with pytest.raises(InvalidHyperparameter):
            resolve_feature_count(1.5, 9)


class TestGradientBoosting:
    def test_zero_rounds_is_prior(self, blobs):
        X, y = blobs
        y = y.copy()
        y[:10] = 1
        model = train_gboost(X, y, n_rounds=0)
        np.testing.assert_allclose(model.predict_proba(X)[:, 1], y.mean())

    def test_separable_fit(self, blobs):
        X, y = blobs
        model = train_gboost(X, y, n_rounds=50)
        assert np.all(np.argmax(model.predict_proba(X), axis=1) == y)

    def test_training_loss_decreases(self, blobs):
        X, y = blobs
        trace = train_gboost(X, y, n_rounds=20).loss_trace
        assert len(trace) == 21
        assert trace[-1] < trace[0]

    def test_parameters_round_trip(self, blobs):
        X, y = blobs
        model = train_gboost(X, y, n_rounds=5)
        back = GradientBoostingModel.from_parameters(model.to_parameters())
        np.testing.assert_allclose(back.predict_proba(X), model.predict_proba(X))
