"""Speech-to-text providers for the textual pipeline"""
import logging
import os
from typing import Dict, Optional

import requests

from utils.errors import AsrServiceError, ConfigError, MissingTranscript
from .audio_processor import AudioClip, wav_bytes
from .text_processor import Transcript

logger = logging.getLogger(__name__)

ASR_PROVIDERS = ('sidecar', 'http', 'fixture')


class AsrProvider:
    """Turns a clip into a transcript"""

    name = 'base'

    def transcribe(self, clip: AudioClip) -> Transcript:
        raise NotImplementedError


class SidecarAsrProvider(AsrProvider):
    """Reads <dir>/<id>.txt written next to each clip"""

    name = 'sidecar'

    def __init__(self, directory: str):
        self.directory = directory

    def transcribe(self, clip: AudioClip) -> Transcript:
        path = os.path.join(self.directory, f"{clip.transcript_id}.txt")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read().strip()
        except FileNotFoundError:
            raise MissingTranscript(clip.transcript_id, path)
        return Transcript.from_text(clip.id, text)


class HttpAsrProvider(AsrProvider):
    """POSTs WAV bytes and expects {"transcript": "..."} back"""

    name = 'http'

    def __init__(self, endpoint: str, timeout_ms: int = 10000):
        """
        Initialize HTTP provider

        Args:
            endpoint: URL accepting audio/wav bodies
            timeout_ms: Per-request timeout in milliseconds
        """
        if not endpoint:
            raise ConfigError("HTTP ASR needs --asr-endpoint or RADIOCLASS_ASR_ENDPOINT")
        self.endpoint = endpoint
        self.timeout = timeout_ms / 1000.0

    def transcribe(self, clip: AudioClip) -> Transcript:
        try:
            response = requests.post(
                self.endpoint,
                data=wav_bytes(clip),
                headers={'Content-Type': 'audio/wav'},
                timeout=self.timeout,
            )
        except requests.Timeout:
            raise AsrServiceError(f"ASR request for '{clip.id}' timed out after {self.timeout}s")
        except requests.RequestException as e:
            raise AsrServiceError(f"ASR request for '{clip.id}' failed: {e}")

        if not 200 <= response.status_code < 300:
            raise AsrServiceError(f"ASR service rejected '{clip.id}'", status=response.status_code)
        try:
            payload = response.json()
        except ValueError:
            raise AsrServiceError(f"ASR service returned malformed JSON for '{clip.id}'",
                                  status=response.status_code)
        text = payload.get('transcript') if isinstance(payload, dict) else None
        if not isinstance(text, str):
            raise AsrServiceError(f"ASR response for '{clip.id}' has no 'transcript' string",
                                  status=response.status_code)
        return Transcript.from_text(clip.id, text)


class FixtureAsrProvider(AsrProvider):
    """In-memory id -> text mapping"""

    name = 'fixture'

    def __init__(self, transcripts: Dict[str, str]):
        self.transcripts = dict(transcripts)

    def transcribe(self, clip: AudioClip) -> Transcript:
        text = self.transcripts.get(clip.transcript_id)
        if text is None:
            raise MissingTranscript(clip.transcript_id)
        return Transcript.from_text(clip.id, text)


def build_asr_provider(
    name: str,
    corpus_dir: Optional[str] = None,
    endpoint: Optional[str] = None,
    timeout_ms: int = 10000,
    fixture: Optional[Dict[str, str]] = None,
) -> AsrProvider:
    """Construct a provider from CLI-style settings"""
    if name == 'sidecar':
        if not corpus_dir:
            raise ConfigError("Sidecar ASR needs a corpus directory")
        return SidecarAsrProvider(corpus_dir)
    if name == 'http':
        return HttpAsrProvider(endpoint, timeout_ms)
    if name == 'fixture':
        return FixtureAsrProvider(fixture or {})
    raise ConfigError(f"Unknown ASR provider '{name}' (choose from {', '.join(ASR_PROVIDERS)})")


def transcribe(clip: AudioClip, provider: AsrProvider) -> Transcript:
    """Transcribe one clip with the given provider"""
    transcript = provider.transcribe(clip)
    logger.debug("Transcribed '%s' via %s: %d tokens", clip.id, provider.name, len(transcript.tokens))
    return transcript
