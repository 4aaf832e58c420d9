"""k-nearest-neighbour vote"""
from dataclasses import dataclass

import numpy as np

from utils.errors import DimensionMismatch, EmptyTrainingSet, InvalidHyperparameter
from .linear import binary_proba, check_training_data


def knn_predict_proba(X_train: np.ndarray, y_train: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """
    Class vote among the k nearest training rows by Euclidean distance

    Equal distances go to the lower training index.

    Args:
        X_train: Training matrix
        y_train: 0/1 labels
        x: Query vector
        k: Neighbour count, 1 <= k <= len(X_train)

    Returns:
        (p_landing, p_takeoff)
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    if X_train.ndim != 2 or X_train.shape[0] == 0:
        raise EmptyTrainingSet("k-NN needs at least one training example")
    if not 1 <= k <= X_train.shape[0]:
        raise InvalidHyperparameter(f"k must be in [1, {X_train.shape[0]}], got {k}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (X_train.shape[1],):
        raise DimensionMismatch(f"Query has shape {x.shape}, expected ({X_train.shape[1]},)")
    distances = np.sum((X_train - x) ** 2, axis=1)
    nearest = np.argsort(distances, kind='stable')[:k]
    p_takeoff = np.count_nonzero(np.asarray(y_train)[nearest] == 1) / k
    return np.array([1.0 - p_takeoff, p_takeoff])


@dataclass
class KnnModel:
    X_train: np.ndarray
    y_train: np.ndarray
    k: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch(f"Expected a 2-D query matrix, got shape {X.shape}")
        rows = [knn_predict_proba(self.X_train, self.y_train, x, self.k)[1] for x in X]
        return binary_proba(np.array(rows))

    def to_parameters(self) -> dict:
        return {'X_train': self.X_train, 'y_train': self.y_train, 'k': self.k}

    @classmethod
    def from_parameters(cls, params: dict) -> "KnnModel":
        return cls(
            X_train=np.asarray(params['X_train'], dtype=np.float64),
            y_train=np.asarray(params['y_train']).astype(np.int64),
            k=int(params['k']),
        )


def train_knn(X: np.ndarray, y: np.ndarray, k: int = 5) -> KnnModel:
    """Memorize the training set; k is capped at its size"""
    X, y = check_training_data(X, y)
    if len(y) == 0:
        raise EmptyTrainingSet("k-NN needs at least one training example")
    if k < 1:
        raise InvalidHyperparameter(f"k must be >= 1, got {k}")
    return KnnModel(X_train=X, y_train=y, k=min(k, len(y)))
