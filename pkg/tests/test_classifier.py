import numpy as np
import pytest
from pydantic import ValidationError

from core import ModelHyperparameters, TrainedModel, train_model
from core.classifier import TRADITIONAL_KINDS
from utils.errors import ConfigError, CorpusIoError

FAST = ModelHyperparameters(epochs=100, svm_epochs=100, k=3, n_trees=5, n_rounds=10)


@pytest.fixture
def blobs():
    rng = np.random.default_rng(21)
    X = np.vstack([rng.normal(-1.5, 0.5, (12, 4)), rng.normal(1.5, 0.5, (12, 4))])
    y = np.array([0] * 12 + [1] * 12)
    return X, y


@pytest.mark.parametrize('kind', TRADITIONAL_KINDS + ('ensemble',))
def test_every_traditional_kind_fits_blobs(kind, blobs):
    X, y = blobs
    model = train_model(kind, X, y, 'pooled_spectral', FAST, seed=1)
    proba = model.predict_proba(X)
    assert proba.shape == (24, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert np.mean(model.predict(X) == y) >= 0.9
    assert model.train_meta['seed'] == 1
    assert model.train_meta['n_train'] == 24


@pytest.mark.parametrize('kind', ['logreg', 'rforest', 'gboost', 'ensemble'])
def test_save_load_round_trip(kind, blobs, tmp_path):
    X, y = blobs
    model = train_model(kind, X, y, 'tfidf', FAST, extra_meta={'pipeline': 'textual'})
    path = str(tmp_path / 'models' / f"{kind}.json")
    model.save(path)
    back = TrainedModel.load(path)
    assert back.kind == kind
    assert back.feature_space == 'tfidf'
    assert back.train_meta['pipeline'] == 'textual'
    np.testing.assert_allclose(back.predict_proba(X), model.predict_proba(X), rtol=1e-12)


def test_ensemble_members_recorded(blobs):
    X, y = blobs
    hyper = FAST.model_copy(update={'ensemble_members': ['logreg', 'knn']})
    model = train_model('ensemble', X, y, 'tfidf', hyper)
    assert model.estimator.kinds == ['logreg', 'knn']
    assert model.train_meta['hyperparameters'] == {'members': ['logreg', 'knn']}


def test_training_traces_in_meta(blobs):
    X, y = blobs
    assert 'loss_trace' in train_model('logreg', X, y, 'tfidf', FAST).train_meta
    assert 'hinge_trace' in train_model('svm', X, y, 'tfidf', FAST).train_meta
    assert 'oob_score' in train_model('rforest', X, y, 'tfidf', FAST).train_meta


def test_cnn_needs_spectrogram_tensor(blobs):
    X, y = blobs
    with pytest.raises(ConfigError):
        train_model('cnn', X, y, 'pooled_spectral')
    with pytest.raises(ConfigError):
        train_model('logreg', X, y, 'spectrogram_2d')
    with pytest.raises(ConfigError):
        train_model('perceptron', X, y, 'tfidf')
    with pytest.raises(ConfigError):
        train_model('logreg', X, y, 'mfcc')


def test_hyperparameter_validation():
    with pytest.raises(ValidationError):
        ModelHyperparameters(ensemble_members=['cnn'])
    with pytest.raises(ValidationError):
        ModelHyperparameters(ensemble_members=[])
    with pytest.raises(ValidationError):
        ModelHyperparameters(feature_frac=0.0)
    with pytest.raises(ValidationError):
        ModelHyperparameters(k=0)
    assert ModelHyperparameters(feature_frac='0.5').feature_frac == 0.5
    with pytest.raises(ConfigError):
        ModelHyperparameters().for_kind('bayes')


def test_load_missing_file(tmp_path):
    with pytest.raises(CorpusIoError):
        TrainedModel.load(str(tmp_path / 'absent.json'))
