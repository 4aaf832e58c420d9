"""Small convolutional network on mel spectrograms, trained with Adam"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from utils.errors import InvalidHyperparameter, NonFiniteLoss, ShapeMismatch, SingleClassTrainingSet
from utils.seeding import make_rng
from .linear import binary_proba, sigmoid

logger = logging.getLogger(__name__)

INPUT_SHAPE = (128, 130, 1)
CONV_FILTERS = (8, 16)
DENSE_UNITS = 32
PARAMETER_NAMES = (
    'conv1_w', 'conv1_b',
    'conv2_w', 'conv2_b',
    'dense1_w', 'dense1_b',
    'dense2_w', 'dense2_b',
)


def conv2d_valid(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    3x3 stride-1 'valid' convolution, channels last

    Args:
        x: (N, H, W, C_in)
        w: (3, 3, C_in, C_out)
        b: (C_out,)

    Returns:
        (N, H-2, W-2, C_out)
    """
    kh, kw = w.shape[:2]
    ho, wo = x.shape[1] - kh + 1, x.shape[2] - kw + 1
    out = np.zeros((x.shape[0], ho, wo, w.shape[3]))
    for i in range(kh):
        for j in range(kw):
            out += x[:, i:i + ho, j:j + wo, :] @ w[i, j]
    return out + b


def conv2d_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv2d_valid with respect to input, weights and bias"""
    kh, kw = w.shape[:2]
    ho, wo = grad_out.shape[1:3]
    grad_x = np.zeros_like(x)
    grad_w = np.zeros_like(w)
    for i in range(kh):
        for j in range(kw):
            window = x[:, i:i + ho, j:j + wo, :]
            grad_w[i, j] = np.tensordot(window, grad_out, axes=([0, 1, 2], [0, 1, 2]))
            grad_x[:, i:i + ho, j:j + wo, :] += grad_out @ w[i, j].T
    return grad_x, grad_w, grad_out.sum(axis=(0, 1, 2))


def max_pool2x2(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    2x2 stride-2 max pooling; odd trailing rows/columns are dropped

    Returns:
        (pooled, argmax index 0..3 within each window)
    """
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    windows = x[:, :2 * ho, :2 * wo, :].reshape(n, ho, 2, wo, 2, c)
    windows = windows.transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
    arg = np.argmax(windows, axis=-1)
    return np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0], arg


def max_pool_backward(grad_out: np.ndarray, arg: np.ndarray, input_shape: Tuple[int, ...]) -> np.ndarray:
    """Route each pooled gradient to the winning input of its window"""
    n, ho, wo, c = grad_out.shape
    routed = np.zeros((n, ho, wo, c, 4))
    np.put_along_axis(routed, arg[..., None], grad_out[..., None], axis=-1)
    routed = routed.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * ho, 2 * wo, c)
    grad_x = np.zeros(input_shape)
    grad_x[:, :2 * ho, :2 * wo, :] = routed
    return grad_x


def flattened_size(input_shape: Tuple[int, int, int]) -> int:
    h, w, _ = input_shape
    for _ in CONV_FILTERS:
        h, w = (h - 2) // 2, (w - 2) // 2
    return h * w * CONV_FILTERS[-1]


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_parameters(seed: int, input_shape: Tuple[int, int, int] = INPUT_SHAPE) -> Dict[str, np.ndarray]:
    """Glorot-uniform weights and zero biases from make_rng(seed, "cnn", "init")"""
    rng = make_rng(seed, 'cnn', 'init')
    c_in = input_shape[2]
    f1, f2 = CONV_FILTERS
    flat = flattened_size(input_shape)
    if flat <= 0:
        raise ShapeMismatch(f"Input shape {input_shape} is too small for two conv blocks")
    return {
        'conv1_w': glorot_uniform(rng, (3, 3, c_in, f1), 9 * c_in, 9 * f1),
        'conv1_b': np.zeros(f1),
        'conv2_w': glorot_uniform(rng, (3, 3, f1, f2), 9 * f1, 9 * f2),
        'conv2_b': np.zeros(f2),
        'dense1_w': glorot_uniform(rng, (flat, DENSE_UNITS), flat, DENSE_UNITS),
        'dense1_b': np.zeros(DENSE_UNITS),
        'dense2_w': glorot_uniform(rng, (DENSE_UNITS, 1), DENSE_UNITS, 1),
        'dense2_b': np.zeros(1),
    }


def zero_parameters(input_shape: Tuple[int, int, int] = INPUT_SHAPE) -> Dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in init_parameters(0, input_shape).items()}


def _check_flat(params: Dict[str, np.ndarray], flat: int) -> None:
    if params['dense1_w'].shape[0] != flat:
        raise ShapeMismatch(
            f"Flattened activations have {flat} values but dense layer expects {params['dense1_w'].shape[0]}"
        )


def forward(params: Dict[str, np.ndarray], x: np.ndarray) -> Tuple[np.ndarray, dict]:
    """
    Logits for a batch plus the activations backward() needs

    Args:
        params: Network weights
        x: (N, H, W, C) batch

    Returns:
        (logits of shape (N,), cache)
    """
    z1 = conv2d_valid(x, params['conv1_w'], params['conv1_b'])
    a1 = np.maximum(z1, 0.0)
    p1, arg1 = max_pool2x2(a1)
    z2 = conv2d_valid(p1, params['conv2_w'], params['conv2_b'])
    a2 = np.maximum(z2, 0.0)
    p2, arg2 = max_pool2x2(a2)
    flat = p2.reshape(len(x), -1)
    _check_flat(params, flat.shape[1])
    z3 = flat @ params['dense1_w'] + params['dense1_b']
    a3 = np.maximum(z3, 0.0)
    logits = (a3 @ params['dense2_w'] + params['dense2_b'])[:, 0]
    cache = dict(x=x, z1=z1, p1=p1, arg1=arg1, z2=z2, arg2=arg2, p2_shape=p2.shape, flat=flat, z3=z3, a3=a3)
    return logits, cache


def bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of sigmoid(logits)"""
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def backward(params: Dict[str, np.ndarray], cache: dict, logits: np.ndarray, y: np.ndarray) -> Dict[str, np.ndarray]:
    """Gradients of bce_from_logits with respect to every parameter"""
    n = len(y)
    d_logits = (sigmoid(logits) - y)[:, None] / n
    grads = {
        'dense2_w': cache['a3'].T @ d_logits,
        'dense2_b': d_logits.sum(axis=0),
    }
    d_z3 = (d_logits @ params['dense2_w'].T) * (cache['z3'] > 0)
    grads['dense1_w'] = cache['flat'].T @ d_z3
    grads['dense1_b'] = d_z3.sum(axis=0)

    d_p2 = (d_z3 @ params['dense1_w'].T).reshape(cache['p2_shape'])
    d_z2 = max_pool_backward(d_p2, cache['arg2'], cache['z2'].shape) * (cache['z2'] > 0)
    d_p1, grads['conv2_w'], grads['conv2_b'] = conv2d_backward(cache['p1'], params['conv2_w'], d_z2)

    d_z1 = max_pool_backward(d_p1, cache['arg1'], cache['z1'].shape) * (cache['z1'] > 0)
    _, grads['conv1_w'], grads['conv1_b'] = conv2d_backward(cache['x'], params['conv1_w'], d_z1)
    return grads


def loss_and_gradients(params: Dict[str, np.ndarray], x: np.ndarray, y: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    logits, cache = forward(params, x)
    return bce_from_logits(logits, y), backward(params, cache, logits, y)


def _check_batch(x: np.ndarray, input_shape: Tuple[int, ...]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4 or tuple(x.shape[1:]) != tuple(input_shape):
        raise ShapeMismatch(f"CNN expects input of shape (N, {', '.join(map(str, input_shape))}), got {x.shape}")
    return x


def cnn_forward(spectrogram: np.ndarray, params: Dict[str, np.ndarray], input_shape=INPUT_SHAPE) -> float:
    """
    Takeoff probability for one spectrogram

    Args:
        spectrogram: Spectrogram or (H, W, 1) array with values in [0, 1]
        params: Network weights

    Returns:
        Probability in (0, 1)
    """
    values = getattr(spectrogram, 'values', spectrogram)
    if np.ndim(values) == 2:
        values = np.asarray(values)[..., None]
    logits, _ = forward(params, _check_batch(values, input_shape))
    return float(sigmoid(logits)[0])


class AdamOptimizer:
    """Adam with bias-corrected moment estimates"""

    def __init__(self, params: Dict[str, np.ndarray], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
        self.step_count += 1
        c1 = 1.0 - self.beta1 ** self.step_count
        c2 = 1.0 - self.beta2 ** self.step_count
        for name in params:
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grads[name]
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grads[name] ** 2
            params[name] -= self.lr * (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)


@dataclass
class CnnModel:
    params: Dict[str, np.ndarray]
    input_shape: Tuple[int, int, int] = INPUT_SHAPE
    loss_trace: List[float] = field(default_factory=list)

    def predict_proba(self, X: np.ndarray, batch_size: int = 32) -> np.ndarray:
        X = _check_batch(X, self.input_shape)
        out = [sigmoid(forward(self.params, X[i:i + batch_size])[0]) for i in range(0, len(X), batch_size)]
        return binary_proba(np.concatenate(out) if out else np.zeros(0))

    def to_parameters(self) -> dict:
        payload = {name: self.params[name] for name in PARAMETER_NAMES}
        payload['input_shape'] = np.array(self.input_shape, dtype=np.float64)
        return payload

    @classmethod
    def from_parameters(cls, payload: dict) -> "CnnModel":
        shape = tuple(int(v) for v in np.asarray(payload['input_shape']))
        return cls(
            params={name: np.asarray(payload[name], dtype=np.float64) for name in PARAMETER_NAMES},
            input_shape=shape,
        )


def train_cnn(
    X: np.ndarray,
    y: np.ndarray,
    epochs: int = 15,
    batch: int = 16,
    lr: float = 0.001,
    seed: int = 42,
) -> CnnModel:
    """
    Mini-batch Adam on binary cross-entropy

    Each epoch shuffles with make_rng(seed, "cnn", "shuffle", epoch).

    Args:
        X: (N, H, W, 1) spectrogram tensor
        y: 0/1 labels
        epochs: Passes over the data
        batch: Mini-batch size
        lr: Adam learning rate
        seed: Run seed

    Returns:
        CnnModel with the per-epoch mean training loss
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 4:
        raise ShapeMismatch(f"CNN expects an (N, H, W, C) tensor, got shape {X.shape}")
    y = np.asarray(y, dtype=np.float64)
    if len(y) != len(X):
        raise ShapeMismatch(f"{len(X)} inputs but {len(y)} labels")
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise SingleClassTrainingSet("CNN training needs at least two examples covering both classes")
    if epochs < 0 or batch < 1 or lr <= 0:
        raise InvalidHyperparameter(f"cnn needs epochs >= 0, batch >= 1, lr > 0 (got {epochs}, {batch}, {lr})")

    input_shape = tuple(X.shape[1:])
    params = init_parameters(seed, input_shape)
    optimizer = AdamOptimizer(params, lr=lr)
    trace = []
    for epoch in range(epochs):
        order = make_rng(seed, 'cnn', 'shuffle', epoch).permutation(len(y))
        total = 0.0
        for start in range(0, len(y), batch):
            idx = order[start:start + batch]
            loss, grads = loss_and_gradients(params, X[idx], y[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, loss)
            optimizer.step(params, grads)
            total += loss * len(idx)
        epoch_loss = total / len(y)
        trace.append(epoch_loss)
        logger.debug("cnn epoch %d: loss %.6f", epoch, epoch_loss)
    return CnnModel(params=params, input_shape=input_shape, loss_trace=trace)
