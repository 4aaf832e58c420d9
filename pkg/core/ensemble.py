"""Soft-voting ensemble"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import EmptyEnsemble, InvalidProbabilities

PROBA_TOLERANCE = 1e-9


def soft_vote(probas: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Predict the class with the largest summed member probability

    Exact ties go to landing (class 0).

    Args:
        probas: One (2,) vector or (n, 2) matrix per member

    Returns:
        (predicted class per row, mean probability per row); scalars
        and (2,) vectors for single-vector input
    """
    if len(probas) == 0:
        raise EmptyEnsemble("Soft voting needs at least one member")
    stacked = np.stack([np.asarray(p, dtype=np.float64) for p in probas])
    if stacked.shape[-1] != 2:
        raise InvalidProbabilities(f"Expected two class probabilities, got shape {stacked.shape[1:]}")
    if np.any(stacked < 0) or np.any(np.abs(stacked.sum(axis=-1) - 1.0) > PROBA_TOLERANCE):
        raise InvalidProbabilities("Every member vector must be non-negative and sum to 1")
    total = stacked.sum(axis=0)
    return np.argmax(total, axis=-1), total / len(probas)


@dataclass
class SoftVotingEnsemble:
    """Equal-weight average of independently trained members"""

    members: List[object]

    def predict_proba(self, X) -> np.ndarray:
        _, mean = soft_vote([m.predict_proba(X) for m in self.members])
        return mean

    def predict(self, X) -> np.ndarray:
        predicted, _ = soft_vote([m.predict_proba(X) for m in self.members])
        return predicted

    @property
    def kinds(self) -> List[str]:
        return [m.kind for m in self.members]

    def to_parameters(self) -> dict:
        return {
            'members': [
                {'kind': m.kind, 'parameters': m.estimator.to_parameters(), 'train_meta': m.train_meta}
                for m in self.members
            ]
        }
