import json

import numpy as np
import pytest

from utils import CorpusValidator, InputValidator, ReportFormatter
from utils.validators import require
from utils.config import DEFAULT_SEED, RunConfig, load_run_config
from utils.errors import ConfigError, DataError
from utils.seeding import make_rng
from utils.serialization import dumps, loads


class TestRunConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv('RADIOCLASS_SEED', raising=False)
        config = load_run_config()
        assert config.seed == DEFAULT_SEED
        assert config.pipelines == ['textual', 'spectral']
        assert config.denoise.enabled is True
        assert config.spectral.variant == 'mel'

    def test_environment_seed(self, monkeypatch):
        monkeypatch.setenv('RADIOCLASS_SEED', '99')
        assert load_run_config().seed == 99
        monkeypatch.setenv('RADIOCLASS_SEED', 'abc')
        with pytest.raises(ConfigError):
            load_run_config()

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'seed': 5, 'repeats': 3, 'hyper': {'k': 7, 'n_trees': 20}}))
        config = load_run_config(str(path), {'seed': 8, 'repeats': None, 'hyper': {'k': 3}})
        assert config.seed == 8
        assert config.repeats == 3
        assert config.hyper.k == 3
        assert config.hyper.n_trees == 20

    def test_variant_spellings(self):
        assert RunConfig(variant='log-mel').variant == 'log_mel'
        assert RunConfig(variant='LogMel').variant == 'log_mel'

    def test_invalid_values(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(overrides={'pipelines': ['video']})
        with pytest.raises(ConfigError):
            load_run_config(overrides={'models': []})
        with pytest.raises(ConfigError):
            load_run_config(overrides={'train_frac': 1.0})
        with pytest.raises(ConfigError):
            load_run_config(str(tmp_path / 'missing.json'))
        bad = tmp_path / 'bad.json'
        bad.write_text('[1, 2]')
        with pytest.raises(ConfigError):
            load_run_config(str(bad))

    def test_unset_nested_flags_keep_defaults(self):
        config = load_run_config(overrides={
            'hyper': {'k': None, 'n_trees': None},
            'augment': {'seed': None, 'stretch_factor': 1.2},
            'denoise': {'enabled': None, 'noise_frames': None},
        })
        assert config.hyper.k == RunConfig().hyper.k
        assert config.augment.stretch_factor == 1.2
        assert config.denoise.noise_frames == 5


class TestValidators:
    def test_choices(self):
        result = InputValidator.validate_pipelines(['Spectral', 'textual', 'spectral'])
        assert result == {'valid': True, 'values': ['spectral', 'textual']}
        bad = InputValidator.validate_models(['knn', 'bayes'], ['knn'])
        assert not bad['valid'] and bad['valid_options'] == ['knn']
        with pytest.raises(ConfigError, match='bayes'):
            require(bad)

    def test_variant_and_counts(self):
        assert InputValidator.validate_variant('log_mel')['variant'] == 'log-mel'
        assert not InputValidator.validate_variant('mfcc')['valid']
        assert InputValidator.validate_positive_int('4', 'repeats')['value'] == 4
        assert not InputValidator.validate_positive_int(0, 'repeats')['valid']
        assert InputValidator.validate_traditional_features('Flattened')['features'] == 'flattened'
        assert not InputValidator.validate_traditional_features('stacked')['valid']

    def test_corpus_layout(self, small_corpus, tmp_path):
        result = CorpusValidator.validate_corpus(small_corpus)
        assert result['valid'] and result['clip_count'] == 12
        assert result['missing_transcripts'] == []
        assert not CorpusValidator.validate_corpus(str(tmp_path))['valid']
        assert not CorpusValidator.validate_corpus(str(tmp_path / 'nope'))['valid']


class TestSeeding:
    def test_purposes_are_independent(self):
        a = make_rng(1, 'split', 'landing').random(4)
        b = make_rng(1, 'split', 'takeoff').random(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, make_rng(1, 'split', 'landing').random(4))


class TestSerialization:
    def test_tensors_survive_exactly(self):
        payload = {'w': np.array([[0.1, -2.5], [1e-300, 3.0]]), 'n': np.int64(3), 'meta': {'k': [1, 2]}}
        back = loads(dumps(payload))
        np.testing.assert_array_equal(back['w'], payload['w'])
        assert back['n'] == 3 and back['meta'] == {'k': [1, 2]}

    def test_canonical_text(self):
        assert dumps({'b': 1, 'a': 2}) == dumps({'a': 2, 'b': 1})
        assert dumps({}).endswith('\n')

    def test_bad_payload(self):
        with pytest.raises(DataError):
            loads('{not json')


class TestFormatter:
    def test_summary_box(self):
        box = ReportFormatter.create_summary_box('results', 'body')
        assert 'RESULTS' in box and 'body' in box

    def test_format_list_truncates(self):
        assert ReportFormatter.format_list(['a', 'b', 'c'], limit=2) == 'a, b (+1 more)'
