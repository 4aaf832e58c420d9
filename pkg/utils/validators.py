"""Input validation utilities"""
import os
from typing import List, Optional

from .errors import ConfigError

AUDIO_EXTENSION = '.wav'
LABELS_FILE = 'labels.csv'


class CorpusValidator:
    """Validates corpus directories"""

    @classmethod
    def validate_corpus(cls, corpus_dir: str, require_labels: bool = True) -> dict:
        """
        Validate a corpus directory layout

        Args:
            corpus_dir: Directory holding <id>.wav, optional <id>.txt and labels.csv
            require_labels: Whether labels.csv must exist

        Returns:
            Validation result dictionary
        """
        if not corpus_dir or not os.path.isdir(corpus_dir):
            return {
                'valid': False,
                'error': f'Corpus directory does not exist: {corpus_dir}'
            }

        names = sorted(os.listdir(corpus_dir))
        clip_ids = [os.path.splitext(n)[0] for n in names if n.lower().endswith(AUDIO_EXTENSION)]
        if not clip_ids:
            return {
                'valid': False,
                'error': f'No {AUDIO_EXTENSION} files in {corpus_dir}'
            }

        has_labels = LABELS_FILE in names
        if require_labels and not has_labels:
            return {
                'valid': False,
                'error': f'Missing {LABELS_FILE} in {corpus_dir}'
            }

        sidecars = {os.path.splitext(n)[0] for n in names if n.endswith('.txt')}
        return {
            'valid': True,
            'corpus_dir': corpus_dir,
            'clip_count': len(clip_ids),
            'has_labels': has_labels,
            'missing_transcripts': [cid for cid in clip_ids if cid not in sidecars]
        }


class InputValidator:
    """Validates choice-style inputs"""

    VALID_PIPELINES = ['textual', 'spectral']
    VALID_VARIANTS = ['mel', 'log-mel']
    VALID_ASR_PROVIDERS = ['sidecar', 'http', 'fixture']
    VALID_TRADITIONAL_FEATURES = ['pooled', 'flattened']

    @classmethod
    def _choices(cls, values: List[str], valid: List[str], what: str) -> dict:
        chosen = [v.strip().lower() for v in values if v and v.strip()]
        if not chosen:
            return {
                'valid': False,
                'error': f'No {what} given',
                'valid_options': valid
            }
        unknown = [v for v in chosen if v not in valid]
        if unknown:
            return {
                'valid': False,
                'error': f'Invalid {what}: {", ".join(unknown)}',
                'valid_options': valid
            }
        return {
            'valid': True,
            'values': list(dict.fromkeys(chosen))
        }

    @classmethod
    def validate_models(cls, models: List[str], valid: List[str]) -> dict:
        """Validate model kinds against the registered ones"""
        return cls._choices(models, valid, 'model')

    @classmethod
    def validate_pipelines(cls, pipelines: List[str]) -> dict:
        """Validate pipeline names"""
        return cls._choices(pipelines, cls.VALID_PIPELINES, 'pipeline')

    @classmethod
    def validate_variant(cls, variant: Optional[str]) -> dict:
        """Validate spectral variant"""
        variant = (variant or 'mel').lower().replace('_', '-')
        if variant == 'logmel':
            variant = 'log-mel'
        if variant not in cls.VALID_VARIANTS:
            return {
                'valid': False,
                'error': f'Invalid variant: {variant}',
                'valid_options': cls.VALID_VARIANTS,
                'default': 'mel'
            }
        return {
            'valid': True,
            'variant': variant
        }

    @classmethod
    def validate_traditional_features(cls, features: Optional[str]) -> dict:
        """Validate the spectral input layout for traditional models"""
        features = (features or 'pooled').lower()
        if features not in cls.VALID_TRADITIONAL_FEATURES:
            return {
                'valid': False,
                'error': f'Invalid spectral features: {features}',
                'valid_options': cls.VALID_TRADITIONAL_FEATURES,
                'default': 'pooled'
            }
        return {
            'valid': True,
            'features': features
        }

    @classmethod
    def validate_asr_provider(cls, provider: Optional[str]) -> dict:
        """Validate ASR provider name"""
        provider = (provider or 'sidecar').lower()
        if provider not in cls.VALID_ASR_PROVIDERS:
            return {
                'valid': False,
                'error': f'Invalid ASR provider: {provider}',
                'valid_options': cls.VALID_ASR_PROVIDERS,
                'default': 'sidecar'
            }
        return {
            'valid': True,
            'provider': provider
        }

    @classmethod
    def validate_positive_int(cls, value, name: str, minimum: int = 1) -> dict:
        """Validate an integer count"""
        try:
            number = int(value)
        except (ValueError, TypeError):
            return {
                'valid': False,
                'error': f'{name} must be an integer'
            }
        if number < minimum:
            return {
                'valid': False,
                'error': f'{name} must be at least {minimum}'
            }
        return {
            'valid': True,
            'value': number
        }


def require(result: dict) -> dict:
    """Raise ConfigError for an invalid validation result"""
    if not result['valid']:
        options = result.get('valid_options')
        suffix = f" (valid: {', '.join(map(str, options))})" if options else ''
        raise ConfigError(result['error'] + suffix)
    return result
