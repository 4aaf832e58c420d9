import numpy as np
import pytest

from core.corpus_gen import CorpusGenerator, SynthSpec
from processors.audio_processor import AudioClip


def sine(freq, seconds, rate=22050, amplitude=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return amplitude * np.sin(2.0 * np.pi * freq * t)


@pytest.fixture
def make_clip():
    """Factory for in-memory clips"""
    def _make(samples, rate=22050, label=None, clip_id='c'):
        return AudioClip(samples=np.asarray(samples, dtype=np.float64), sample_rate=rate, label=label, id=clip_id)
    return _make


@pytest.fixture
def separable_2d():
    """Eight points split by the line x0 + x1 = 0"""
    X = np.array([
        [-2.0, -1.0], [-1.5, -2.0], [-1.0, -0.5], [-0.5, -1.5],
        [0.5, 1.5], [1.0, 0.5], [1.5, 2.0], [2.0, 1.0],
    ])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    return X, y


@pytest.fixture(scope='session')
def small_corpus(tmp_path_factory):
    """Twelve synthetic clips (6 landing / 6 takeoff) written to disk"""
    out = tmp_path_factory.mktemp('corpus')
    spec = SynthSpec(n_clips=12, class_balance=0.5, seed=7)
    CorpusGenerator(spec).generate_corpus(str(out))
    return str(out)
