"""JSON encoding of nested parameter payloads with base64 float64 tensors"""
import base64
import json
from typing import Any

import numpy as np

from .errors import DataError

TENSOR_KEY = '__tensor__'


def encode_tensor(array: np.ndarray) -> dict:
    """Little-endian float64 blob plus shape"""
    data = np.ascontiguousarray(np.asarray(array, dtype='<f8'))
    return {
        TENSOR_KEY: base64.b64encode(data.tobytes()).decode('ascii'),
        'dtype': '<f8',
        'shape': list(data.shape),
    }


def decode_tensor(payload: dict) -> np.ndarray:
    if payload.get('dtype', '<f8') != '<f8':
        raise DataError(f"Unsupported tensor dtype {payload.get('dtype')}")
    raw = base64.b64decode(payload[TENSOR_KEY])
    return np.frombuffer(raw, dtype='<f8').astype(np.float64).reshape(payload['shape'])


def to_jsonable(value: Any) -> Any:
    """Recursively replace ndarrays with tensor blobs and numpy scalars with Python ones"""
    if isinstance(value, np.ndarray):
        return encode_tensor(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def from_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        if TENSOR_KEY in value:
            return decode_tensor(value)
        return {k: from_jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [from_jsonable(v) for v in value]
    return value


def dumps(payload: Any) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline"""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + '\n'


def loads(text: str) -> Any:
    try:
        return from_jsonable(json.loads(text))
    except (ValueError, KeyError, TypeError) as e:
        raise DataError(f"Cannot decode model payload: {e}") from e
