"""Linear classifiers: L2 logistic regression and a Platt-calibrated linear SVM"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from utils.errors import DimensionMismatch, InvalidHyperparameter

logger = logging.getLogger(__name__)


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-free logistic function"""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def check_training_data(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Coerce to float64 matrix and int labels, rejecting mismatched shapes"""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise DimensionMismatch(f"Feature matrix must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape} labels")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("Feature matrix contains non-finite values")
    if not np.all(np.isin(y, (0, 1))):
        raise DimensionMismatch("Labels must be 0 (landing) or 1 (takeoff)")
    return X, y.astype(np.int64)


def binary_proba(p_takeoff: np.ndarray) -> np.ndarray:
    """Stack (p_landing, p_takeoff) columns"""
    p = np.clip(np.asarray(p_takeoff, dtype=np.float64), 0.0, 1.0)
    return np.column_stack([1.0 - p, p])


@dataclass
class FeatureScaler:
    """Column standardization learned on the training matrix"""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0), scale=np.where(std > 1e-12, std, 1.0))

    @classmethod
    def identity(cls, dim: int) -> "FeatureScaler":
        return cls(mean=np.zeros(dim), scale=np.ones(dim))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise DimensionMismatch(f"Expected {len(self.mean)} features, got shape {X.shape}")
        return (X - self.mean) / self.scale


def _step_cap(X: np.ndarray, curvature: float) -> float:
    """Inverse Lipschitz bound of the smooth loss gradient"""
    if X.shape[0] == 0:
        return np.inf
    top = np.linalg.norm(X, 2) ** 2 / X.shape[0]
    return 1.0 / max(curvature * top, 1e-12)


def logistic_loss_and_grad(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> Tuple[float, np.ndarray, float]:
    """
    Mean log loss plus l2/2 * ||w||^2, with its gradient

    Args:
        weights: Weight vector
        bias: Intercept (not regularized)
        X: Feature matrix
        y: 0/1 labels
        l2: Ridge strength

    Returns:
        (loss, grad_weights, grad_bias)
    """
    z = X @ weights + bias
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * float(weights @ weights)
    residual = sigmoid(z) - y
    grad_w = X.T @ residual / len(y) + l2 * weights
    grad_b = float(np.mean(residual))
    return float(loss), grad_w, grad_b


@dataclass
class LogisticRegressionModel:
    weights: np.ndarray
    bias: float
    scaler: FeatureScaler
    loss_trace: List[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return binary_proba(sigmoid(self.decision_function(X)))

    def to_parameters(self) -> dict:
        return {
            'weights': self.weights,
            'bias': self.bias,
            'scaler_mean': self.scaler.mean,
            'scaler_scale': self.scaler.scale,
        }

    @classmethod
    def from_parameters(cls, params: dict) -> "LogisticRegressionModel":
        return cls(
            weights=np.asarray(params['weights'], dtype=np.float64),
            bias=float(params['bias']),
            scaler=FeatureScaler(np.asarray(params['scaler_mean']), np.asarray(params['scaler_scale'])),
        )


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    lr: float = 0.1,
    epochs: int = 500,
    l2: float = 1e-3,
    standardize: bool = True,
) -> LogisticRegressionModel:
    """
    Full-batch gradient descent on L2-regularized log loss from zero init

    The step is min(lr, 1/L) where L bounds the gradient's Lipschitz
    constant, so the loss never increases.

    Args:
        X: Training matrix
        y: 0/1 labels
        lr: Learning rate
        epochs: Gradient steps
        l2: Ridge strength
        standardize: Learn per-column mean/std scaling first

    Returns:
        LogisticRegressionModel with the per-epoch loss trace
    """
    X, y = check_training_data(X, y)
    if lr <= 0 or epochs < 0 or l2 < 0:
        raise InvalidHyperparameter(f"logreg needs lr > 0, epochs >= 0, l2 >= 0 (got {lr}, {epochs}, {l2})")
    scaler = FeatureScaler.fit(X) if standardize else FeatureScaler.identity(X.shape[1])
    Z = scaler.transform(X)
    Zb = np.hstack([Z, np.ones((len(Z), 1))])
    step = min(lr, 1.0 / (1.0 / _step_cap(Zb, 0.25) + l2))

    weights = np.zeros(Z.shape[1])
    bias = 0.0
    trace = []
    for _ in range(epochs):
        loss, grad_w, grad_b = logistic_loss_and_grad(weights, bias, Z, y, l2)
        trace.append(loss)
        weights = weights - step * grad_w
        bias = bias - step * grad_b
    if epochs:
        logger.debug("logreg: loss %.6f -> %.6f over %d epochs", trace[0], trace[-1], epochs)
    return LogisticRegressionModel(weights=weights, bias=bias, scaler=scaler, loss_trace=trace)


def fit_platt(margins: np.ndarray, y: np.ndarray, max_iter: int = 100) -> Tuple[float, float]:
    """
    Fit p = sigmoid(a * margin + b) by regularized-target Newton iterations

    Targets are (N+ + 1)/(N+ + 2) and 1/(N- + 2) instead of 1 and 0, so a
    separable training set still yields a finite slope.

    Returns:
        (a, b)
    """
    f = np.asarray(margins, dtype=np.float64)
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    target = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def objective(a, b):
        z = a * f + b
        return float(np.sum(np.logaddexp(0.0, z) - target * z))

    a, b = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    value = objective(a, b)
    for _ in range(max_iter):
        p = sigmoid(a * f + b)
        d1 = p - target
        g = np.array([np.sum(d1 * f), np.sum(d1)])
        if np.max(np.abs(g)) < 1e-10:
            break
        h = p * (1.0 - p)
        hessian = np.array([
            [np.sum(h * f * f) + 1e-12, np.sum(h * f)],
            [np.sum(h * f), np.sum(h) + 1e-12],
        ])
        direction = np.linalg.solve(hessian, g)
        step = 1.0
        while step >= 1e-10:
            na, nb = a - step * direction[0], b - step * direction[1]
            candidate = objective(na, nb)
            if candidate < value + 1e-4 * step * -float(g @ direction):
                a, b, value = na, nb, candidate
                break
            step /= 2.0
        else:
            break
    return a, b


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    scaler: FeatureScaler
    platt_a: float
    platt_b: float
    hinge_trace: List[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return binary_proba(sigmoid(self.platt_a * self.decision_function(X) + self.platt_b))

    def to_parameters(self) -> dict:
        return {
            'weights': self.weights,
            'bias': self.bias,
            'scaler_mean': self.scaler.mean,
            'scaler_scale': self.scaler.scale,
            'platt': np.array([self.platt_a, self.platt_b]),
        }

    @classmethod
    def from_parameters(cls, params: dict) -> "LinearSvmModel":
        platt = np.asarray(params['platt'], dtype=np.float64)
        return cls(
            weights=np.asarray(params['weights'], dtype=np.float64),
            bias=float(params['bias']),
            scaler=FeatureScaler(np.asarray(params['scaler_mean']), np.asarray(params['scaler_scale'])),
            platt_a=float(platt[0]),
            platt_b=float(platt[1]),
        )


def hinge_objective(weights: np.ndarray, bias: float, X: np.ndarray, signs: np.ndarray, lam: float) -> float:
    margins = signs * (X @ weights + bias)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + 0.5 * lam * weights @ weights)


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    lr: float = 0.1,
    epochs: int = 500,
    C: float = 1.0,
    standardize: bool = True,
) -> LinearSvmModel:
    """
    Linear SVM by full-batch subgradient descent, then Platt scaling

    Minimizes lam/2 * ||w||^2 + mean(max(0, 1 - s * (w.x + b))) with
    lam = 1 / (C * n) and s in {-1, +1}. Step size decays as
    lr / sqrt(epoch + 1). Starting from zero, flipping every label
    exactly negates the learned weights.

    Args:
        X: Training matrix
        y: 0/1 labels
        lr: Base step size
        epochs: Subgradient steps
        C: Inverse regularization
        standardize: Learn per-column mean/std scaling first

    Returns:
        LinearSvmModel with Platt coefficients fitted on training margins
    """
    X, y = check_training_data(X, y)
    if lr <= 0 or epochs < 0 or C <= 0:
        raise InvalidHyperparameter(f"svm needs lr > 0, epochs >= 0, C > 0 (got {lr}, {epochs}, {C})")
    scaler = FeatureScaler.fit(X) if standardize else FeatureScaler.identity(X.shape[1])
    Z = scaler.transform(X)
    n = len(y)
    lam = 1.0 / (C * n)
    signs = np.where(y == 1, 1.0, -1.0)

    weights = np.zeros(Z.shape[1])
    bias = 0.0
    trace = []
    for epoch in range(epochs):
        margins = signs * (Z @ weights + bias)
        active = margins < 1.0
        trace.append(float(np.mean(np.maximum(0.0, 1.0 - margins))))
        grad_w = lam * weights - (signs[active] @ Z[active]) / n
        grad_b = -float(np.sum(signs[active])) / n
        step = lr / np.sqrt(epoch + 1.0)
        weights = weights - step * grad_w
        bias = bias - step * grad_b

    a, b = fit_platt(Z @ weights + bias, y)
    logger.debug("svm: final hinge %.6f, platt (%.4f, %.4f)", trace[-1] if trace else float('nan'), a, b)
    return LinearSvmModel(weights=weights, bias=bias, scaler=scaler, platt_a=a, platt_b=b, hinge_trace=trace)
