"""Model factory and the persisted TrainedModel envelope"""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from utils import serialization
from utils.errors import ConfigError, CorpusIoError, DataError, InvalidProbabilities
from .cnn import CnnModel, train_cnn
from .ensemble import PROBA_TOLERANCE, SoftVotingEnsemble
from .linear import LinearSvmModel, LogisticRegressionModel, train_logreg, train_svm
from .neighbors import KnnModel, train_knn
from .trees import (
    GradientBoostingModel,
    RandomForestModel,
    TreeClassifierModel,
    train_dtree,
    train_gboost,
    train_rforest,
)

logger = logging.getLogger(__name__)

TRADITIONAL_KINDS = ('logreg', 'svm', 'knn', 'dtree', 'rforest', 'gboost')
MODEL_KINDS = TRADITIONAL_KINDS + ('ensemble', 'cnn')
DEFAULT_ENSEMBLE = ('logreg', 'svm', 'rforest', 'gboost', 'knn')
FEATURE_SPACES = ('tfidf', 'pooled_spectral', 'flattened_spectral', 'spectrogram_2d')

ESTIMATORS = {
    'logreg': LogisticRegressionModel,
    'svm': LinearSvmModel,
    'knn': KnnModel,
    'dtree': TreeClassifierModel,
    'rforest': RandomForestModel,
    'gboost': GradientBoostingModel,
    'cnn': CnnModel,
}


class ModelHyperparameters(BaseModel):
    """Training knobs for every model kind"""

    # logistic regression
    lr: float = Field(0.1, gt=0.0)
    epochs: int = Field(500, ge=0)
    l2: float = Field(1e-3, ge=0.0)
    standardize: bool = True
    # svm
    svm_lr: float = Field(0.1, gt=0.0)
    svm_epochs: int = Field(500, ge=0)
    C: float = Field(1.0, gt=0.0)
    # knn
    k: int = Field(5, ge=1)
    # decision tree
    max_depth: Optional[int] = Field(None, ge=0)
    min_leaf: int = Field(1, ge=1)
    # random forest
    n_trees: int = Field(100, ge=1)
    rf_max_depth: Optional[int] = Field(None, ge=0)
    feature_frac: Union[float, str] = 'sqrt'
    bootstrap: bool = True
    # gradient boosting
    n_rounds: int = Field(100, ge=0)
    gb_lr: float = Field(0.1, gt=0.0)
    gb_depth: int = Field(3, ge=0)
    # cnn
    cnn_epochs: int = Field(15, ge=0)
    batch: int = Field(16, ge=1)
    cnn_lr: float = Field(0.001, gt=0.0)
    # ensemble
    ensemble_members: List[str] = Field(default_factory=lambda: list(DEFAULT_ENSEMBLE))

    @field_validator('feature_frac')
    @classmethod
    def _frac(cls, value):
        if value == 'sqrt':
            return value
        value = float(value)
        if not 0.0 < value <= 1.0:
            raise ValueError("feature_frac must be 'sqrt' or in (0, 1]")
        return value

    @field_validator('ensemble_members')
    @classmethod
    def _members(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("ensemble needs at least one member")
        bad = [m for m in value if m not in TRADITIONAL_KINDS]
        if bad:
            raise ValueError(f"ensemble members must be traditional models, got {bad}")
        return list(value)

    def for_kind(self, kind: str) -> Dict[str, Any]:
        """Keyword arguments for the kind's training function"""
        table = {
            'logreg': dict(lr=self.lr, epochs=self.epochs, l2=self.l2, standardize=self.standardize),
            'svm': dict(lr=self.svm_lr, epochs=self.svm_epochs, C=self.C, standardize=self.standardize),
            'knn': dict(k=self.k),
            'dtree': dict(max_depth=self.max_depth, min_leaf=self.min_leaf),
            'rforest': dict(n_trees=self.n_trees, max_depth=self.rf_max_depth, min_leaf=self.min_leaf,
                            feature_frac=self.feature_frac, bootstrap=self.bootstrap),
            'gboost': dict(n_rounds=self.n_rounds, lr=self.gb_lr, depth=self.gb_depth, min_leaf=self.min_leaf),
            'cnn': dict(epochs=self.cnn_epochs, batch=self.batch, lr=self.cnn_lr),
            'ensemble': dict(members=list(self.ensemble_members)),
        }
        if kind not in table:
            raise ConfigError(f"Unknown model kind '{kind}'")
        return table[kind]


@dataclass
class TrainedModel:
    """
    A fitted estimator plus what is needed to reuse it

    Args:
        kind: One of MODEL_KINDS
        feature_space: Input representation the estimator was fitted on
        estimator: Fitted model object exposing predict_proba
        train_meta: Seed, hyperparameters, traces and pipeline details
    """

    kind: str
    feature_space: str
    estimator: Any
    train_meta: Dict[str, Any] = field(default_factory=dict)

    def predict_proba(self, X) -> np.ndarray:
        """(p_landing, p_takeoff) per row"""
        proba = np.asarray(self.estimator.predict_proba(X), dtype=np.float64)
        if (
            proba.ndim != 2 or proba.shape[1] != 2
            or not np.all(np.isfinite(proba))
            or np.any(proba < 0.0)
            or np.any(np.abs(proba.sum(axis=1) - 1.0) > PROBA_TOLERANCE)
        ):
            raise InvalidProbabilities(f"{self.kind} produced an invalid probability matrix")
        return proba

    def predict(self, X) -> np.ndarray:
        """Class index per row; exact ties go to landing"""
        return np.argmax(self.predict_proba(X), axis=1)

    def to_envelope(self) -> dict:
        return {
            'kind': self.kind,
            'feature_space': self.feature_space,
            'train_meta': self.train_meta,
            'parameters': self.estimator.to_parameters(),
        }

    def dumps(self) -> str:
        return serialization.dumps(self.to_envelope())

    def save(self, path: str):
        directory = os.path.dirname(path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(self.dumps())
        except OSError as e:
            raise CorpusIoError(f"Cannot write model to {path}: {e}") from e
        logger.info("Saved %s model to %s", self.kind, path)

    @classmethod
    def from_envelope(cls, envelope: dict) -> "TrainedModel":
        try:
            kind = envelope['kind']
            feature_space = envelope['feature_space']
            params = envelope['parameters']
            meta = envelope.get('train_meta', {})
        except (KeyError, TypeError) as e:
            raise DataError(f"Model envelope is missing {e}") from e
        if kind == 'ensemble':
            members = [
                cls(m['kind'], feature_space, ESTIMATORS[m['kind']].from_parameters(m['parameters']),
                    m.get('train_meta', {}))
                for m in params['members']
            ]
            return cls(kind, feature_space, SoftVotingEnsemble(members), meta)
        if kind not in ESTIMATORS:
            raise DataError(f"Unknown model kind '{kind}' in envelope")
        return cls(kind, feature_space, ESTIMATORS[kind].from_parameters(params), meta)

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        return cls.from_envelope(serialization.loads(text))

    @classmethod
    def load(cls, path: str) -> "TrainedModel":
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise CorpusIoError(f"Cannot read model {path}: {e}") from e
        return cls.loads(text)


def _traces(estimator) -> Dict[str, Any]:
    meta = {}
    for attr in ('loss_trace', 'hinge_trace'):
        trace = getattr(estimator, attr, None)
        if trace:
            meta[attr] = [float(v) for v in trace]
    oob = getattr(estimator, 'oob_score', None)
    if oob is not None:
        meta['oob_score'] = float(oob)
    return meta


def train_model(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    feature_space: str,
    hyper: Optional[ModelHyperparameters] = None,
    seed: int = 42,
    extra_meta: Optional[Dict[str, Any]] = None,
) -> TrainedModel:
    """
    Train one model kind on a feature matrix (or spectrogram tensor for cnn)

    Args:
        kind: One of MODEL_KINDS
        X: Features; (N, 128, 130, 1) for cnn
        y: 0/1 labels
        feature_space: One of FEATURE_SPACES
        hyper: Hyperparameters (defaults when omitted)
        seed: Run seed
        extra_meta: Merged into train_meta (pipeline, variant, tfidf model)

    Returns:
        TrainedModel
    """
    hyper = hyper or ModelHyperparameters()
    if kind not in MODEL_KINDS:
        raise ConfigError(f"Unknown model kind '{kind}' (choose from {', '.join(MODEL_KINDS)})")
    if feature_space not in FEATURE_SPACES:
        raise ConfigError(f"Unknown feature space '{feature_space}'")
    if (kind == 'cnn') != (feature_space == 'spectrogram_2d'):
        raise ConfigError(f"Model '{kind}' cannot train on feature space '{feature_space}'")

    kwargs = hyper.for_kind(kind)
    if kind == 'ensemble':
        members = [train_model(m, X, y, feature_space, hyper, seed) for m in kwargs['members']]
        estimator = SoftVotingEnsemble(members)
    elif kind == 'logreg':
        estimator = train_logreg(X, y, **kwargs)
    elif kind == 'svm':
        estimator = train_svm(X, y, **kwargs)
    elif kind == 'knn':
        estimator = train_knn(X, y, **kwargs)
    elif kind == 'dtree':
        estimator = train_dtree(X, y, **kwargs)
    elif kind == 'rforest':
        estimator = train_rforest(X, y, seed=seed, **kwargs)
    elif kind == 'gboost':
        estimator = train_gboost(X, y, **kwargs)
    else:
        estimator = train_cnn(X, y, seed=seed, **kwargs)

    meta = {
        'seed': int(seed),
        'hyperparameters': kwargs,
        'n_train': int(len(y)),
    }
    if 'epochs' in kwargs:
        meta['epochs'] = kwargs['epochs']
    meta.update(_traces(estimator))
    meta.update(extra_meta or {})
    logger.info("Trained %s on %d examples (%s)", kind, len(y), feature_space)
    return TrainedModel(kind=kind, feature_space=feature_space, estimator=estimator, train_meta=meta)

