"""Feature processor factory and manager"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from utils.errors import ConfigError, MissingTranscript
from .asr_processor import AsrProvider, FixtureAsrProvider, HttpAsrProvider
from .audio_processor import AudioClip, to_mono
from .denoiser import DenoiseConfig, denoise
from .spectral_processor import (
    SpectralConfig,
    Spectrogram,
    flatten_spectrogram,
    pool_spectrogram,
    spectral_pipeline,
    stack_spectrograms,
)
from .text_processor import TfIdfModel, Transcript, fit_tfidf, transform_corpus

logger = logging.getLogger(__name__)

PIPELINES = ('textual', 'spectral')


def pipeline_label(pipeline: str, variant: str = 'mel') -> str:
    """Report label: textual, spectral-mel or spectral-log-mel"""
    if pipeline == 'textual':
        return 'textual'
    return 'spectral-' + variant.replace('_', '-')


class FeatureProcessor:
    """Main feature processor that routes clips to the textual or spectral pipeline"""

    def __init__(
        self,
        spectral_config: Optional[SpectralConfig] = None,
        denoise_config: Optional[DenoiseConfig] = None,
        asr_provider: Optional[AsrProvider] = None,
        strict: bool = False,
    ):
        """
        Initialize pipelines

        Args:
            spectral_config: Mel feature contract and variant
            denoise_config: Spectral subtraction applied before both pipelines
            asr_provider: Transcript source for the textual pipeline
            strict: Raise on a missing transcript instead of using an empty one
        """
        self.spectral_config = spectral_config or SpectralConfig()
        self.denoise_config = denoise_config or DenoiseConfig()
        self.asr_provider = asr_provider or FixtureAsrProvider({})
        self.strict = strict

        self._spectrograms: Dict[str, Spectrogram] = {}
        self._transcripts: Dict[str, Transcript] = {}
        self.missing: List[str] = []

        self.pipeline_map = {
            'textual': self.transcript,
            'spectral': self.spectrogram,
        }

    def process_clip(self, clip: AudioClip, pipeline: str) -> Dict[str, any]:
        """
        Run one pipeline on one clip

        Returns:
            Dictionary with success flag and the features or the error
        """
        handler = self.pipeline_map.get(pipeline)
        if not handler:
            return {
                'success': False,
                'error': f'Unsupported pipeline: {pipeline}',
                'clip_id': clip.id,
            }
        try:
            return {'success': True, 'clip_id': clip.id, 'features': handler(clip)}
        except MissingTranscript as e:
            return {'success': False, 'error': str(e), 'clip_id': clip.id}

    def spectrogram(self, clip: AudioClip) -> Spectrogram:
        """Normalized spectrogram, cached per clip id"""
        cached = self._spectrograms.get(clip.id)
        if cached is None:
            cached = spectral_pipeline(
                clip,
                self.spectral_config.variant,
                self.spectral_config,
                self.denoise_config,
            )
            self._spectrograms[clip.id] = cached
        return cached

    def transcript(self, clip: AudioClip) -> Transcript:
        """Transcript for the clip, shared by augmented copies of one source"""
        key = clip.transcript_id
        cached = self._transcripts.get(key)
        if cached is None:
            audio = clip
            if isinstance(self.asr_provider, HttpAsrProvider) and self.denoise_config.enabled:
                audio = denoise(to_mono(clip), self.denoise_config)
            cached = self.asr_provider.transcribe(audio)
            self._transcripts[key] = cached
        return Transcript(clip_id=clip.id, text=cached.text, tokens=list(cached.tokens))

    def transcripts(self, clips: Sequence[AudioClip]) -> List[Transcript]:
        """Transcripts for many clips; missing ones become empty documents unless strict"""
        docs = []
        for clip in clips:
            try:
                docs.append(self.transcript(clip))
            except MissingTranscript as e:
                if self.strict:
                    raise
                logger.warning("%s; using an empty document", e)
                if clip.transcript_id not in self.missing:
                    self.missing.append(clip.transcript_id)
                docs.append(Transcript(clip_id=clip.id, text='', tokens=[]))
        return docs

    def fit_textual(self, clips: Sequence[AudioClip]) -> TfIdfModel:
        return fit_tfidf(self.transcripts(clips))

    def textual_matrix(self, clips: Sequence[AudioClip], model: TfIdfModel) -> np.ndarray:
        return transform_corpus(self.transcripts(clips), model)

    def spectral_matrix(self, clips: Sequence[AudioClip]) -> np.ndarray:
        """Pooled (256-d) or flattened spectral rows for traditional classifiers"""
        reduce = pool_spectrogram
        if self.spectral_config.traditional_features == 'flattened':
            reduce = flatten_spectrogram
        rows = [reduce(self.spectrogram(c)).values for c in clips]
        if not rows:
            raise ConfigError("No clips to featurize")
        return np.vstack(rows)

    def spectrogram_tensor(self, clips: Sequence[AudioClip]) -> np.ndarray:
        """(N, 128, 130, 1) tensor for the CNN"""
        return stack_spectrograms(self.spectrogram(c) for c in clips)

    def get_supported_pipelines(self) -> list:
        return list(self.pipeline_map.keys())


__all__ = [
    'FeatureProcessor',
    'PIPELINES',
    'pipeline_label',
]
