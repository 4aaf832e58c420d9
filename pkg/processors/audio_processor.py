"""WAV loading, writing and canonicalization of audio clips"""
import io
import logging
import os
import struct
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import soundfile as sf

from utils.errors import (
    CorpusIoError,
    DataError,
    DimensionMismatch,
    InvalidRange,
    MalformedWav,
    UnsupportedEncoding,
)

logger = logging.getLogger(__name__)

TARGET_RATE = 22050
TARGET_SECONDS = 3.0
RESAMPLE_TAPS = 32

LABELS = ('landing', 'takeoff')
LABEL_TO_INDEX = {name: i for i, name in enumerate(LABELS)}

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioClip:
    """Mono (or channel-major multi-channel) waveform with its rate and label"""

    samples: np.ndarray
    sample_rate: int
    label: Optional[str] = None
    id: str = ""
    source_id: Optional[str] = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, 'samples', samples)
        if self.sample_rate <= 0:
            raise InvalidRange(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise DataError(f"Clip '{self.id}' contains non-finite samples")
        if self.label is not None and self.label not in LABELS:
            raise DataError(f"Unknown label '{self.label}' for clip '{self.id}'")

    @property
    def n_channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.samples.shape[-1] / self.sample_rate

    @property
    def label_index(self) -> Optional[int]:
        return None if self.label is None else LABEL_TO_INDEX[self.label]

    @property
    def transcript_id(self) -> str:
        """Id under which the spoken words are stored (augmented copies share it)"""
        return self.source_id or self.id

    def with_samples(self, samples: np.ndarray, sample_rate: Optional[int] = None, **changes) -> "AudioClip":
        return replace(
            self,
            samples=samples,
            sample_rate=self.sample_rate if sample_rate is None else sample_rate,
            **changes,
        )


@dataclass(frozen=True)
class ClipPartition:
    """Ordered collection of labeled clips"""

    clips: tuple = ()

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    @property
    def ids(self) -> List[str]:
        return [c.id for c in self.clips]

    @property
    def labels(self) -> np.ndarray:
        return np.array([c.label_index for c in self.clips], dtype=np.int64)


class TrainPartition(ClipPartition):
    """Training side of a split; the only input augmentation accepts"""


class TestPartition(ClipPartition):
    """Held-out side of a split; never augmented"""

    __test__ = False


def _inspect_header(data: bytes, path: str):
    """Walk the RIFF chunks and classify the encoding before decoding"""
    if len(data) < 12 or data[:4] != b'RIFF' or data[8:12] != b'WAVE':
        raise MalformedWav(f"{path}: missing RIFF/WAVE header")
    riff_size = struct.unpack('<I', data[4:8])[0]
    if riff_size + 8 > len(data) + 1:
        raise MalformedWav(f"{path}: RIFF size {riff_size} exceeds file length {len(data)}")

    fmt = None
    has_data = False
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        chunk_size = struct.unpack('<I', data[pos + 4:pos + 8])[0]
        body = pos + 8
        if body + chunk_size > len(data):
            raise MalformedWav(f"{path}: chunk {chunk_id!r} overruns the file")
        if chunk_id == b'fmt ':
            if chunk_size < 16:
                raise MalformedWav(f"{path}: fmt chunk too short")
            fmt = struct.unpack('<HHIIHH', data[body:body + 16])
            if fmt[0] == _EXTENSIBLE and chunk_size >= 26:
                fmt = (struct.unpack('<H', data[body + 24:body + 26])[0],) + fmt[1:]
        elif chunk_id == b'data':
            has_data = True
        pos = body + chunk_size + (chunk_size & 1)

    if fmt is None or not has_data:
        raise MalformedWav(f"{path}: missing fmt or data chunk")
    format_tag, channels, _, _, _, bits = fmt
    if format_tag == _PCM and bits in (8, 16, 24, 32):
        pass
    elif format_tag == _IEEE_FLOAT and bits == 32:
        pass
    else:
        raise UnsupportedEncoding(f"{path}: format tag {format_tag:#06x} with {bits}-bit samples")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {channels} channels (1 or 2 supported)")


def load_wav(path: str, label: Optional[str] = None, clip_id: Optional[str] = None) -> AudioClip:
    """
    Load a PCM WAV file as a mono clip at its native rate

    Args:
        path: Path to a .wav file
        label: Optional class label
        clip_id: Id to attach; defaults to the file stem

    Returns:
        AudioClip with samples in [-1, 1]
    """
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise CorpusIoError(f"Cannot read {path}: {e}") from e

    _inspect_header(data, path)
    try:
        samples, rate = sf.read(io.BytesIO(data), dtype='float64', always_2d=True)
    except RuntimeError as e:
        raise MalformedWav(f"{path}: {e}") from e

    clip_id = clip_id or os.path.splitext(os.path.basename(path))[0]
    clip = AudioClip(samples=samples.T, sample_rate=int(rate), label=label, id=clip_id)
    return to_mono(clip)


def _to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(samples * 32768.0), -32768, 32767).astype('<i2')


def write_wav(clip: AudioClip, path: str):
    """Write a mono clip as 16-bit PCM WAV"""
    try:
        sf.write(path, _to_pcm16(clip.samples), clip.sample_rate, subtype='PCM_16', format='WAV')
    except (OSError, RuntimeError) as e:
        raise CorpusIoError(f"Cannot write {path}: {e}") from e


def wav_bytes(clip: AudioClip) -> bytes:
    """Serialize a mono clip to 16-bit WAV bytes in memory"""
    buffer = io.BytesIO()
    sf.write(buffer, _to_pcm16(clip.samples), clip.sample_rate, subtype='PCM_16', format='WAV')
    return buffer.getvalue()


def to_mono(clip: AudioClip) -> AudioClip:
    """Average channels; mono clips pass through"""
    if clip.samples.ndim == 1:
        return clip
    if clip.n_channels == 1:
        return clip.with_samples(clip.samples[0])
    return clip.with_samples(clip.samples.mean(axis=0))


def resample(clip: AudioClip, target_rate: int, taps: int = RESAMPLE_TAPS) -> AudioClip:
    """
    Band-limited resampling with a Hann-windowed sinc kernel

    The kernel spans `taps` zero crossings per side at the lower of the
    two rates, so downsampling also low-passes at the new Nyquist.

    Args:
        clip: Mono clip
        target_rate: Output sample rate in Hz
        taps: Zero crossings per side

    Returns:
        Clip at target_rate with round(len * target / source) samples
    """
    if target_rate <= 0:
        raise InvalidRange(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip
    if clip.samples.ndim != 1:
        raise DimensionMismatch("resample expects a mono clip")

    x = clip.samples
    ratio = target_rate / clip.sample_rate
    n_out = int(round(len(x) * ratio))
    scale = min(1.0, ratio)
    half_width = taps / scale

    out = np.zeros(n_out)
    offsets = np.arange(-int(np.ceil(half_width)), int(np.ceil(half_width)) + 1)
    block = 4096
    for start in range(0, n_out, block):
        positions = np.arange(start, min(start + block, n_out)) / ratio
        base = np.floor(positions).astype(np.int64)
        idx = base[:, None] + offsets[None, :]
        delta = idx - positions[:, None]
        kernel = scale * np.sinc(scale * delta)
        kernel *= np.where(
            np.abs(delta) < half_width,
            0.5 + 0.5 * np.cos(np.pi * delta / half_width),
            0.0,
        )
        valid = (idx >= 0) & (idx < len(x))
        values = np.where(valid, x[np.clip(idx, 0, len(x) - 1)], 0.0)
        out[start:start + len(positions)] = np.sum(kernel * values, axis=1)

    return clip.with_samples(out, sample_rate=target_rate)


def fix_duration(clip: AudioClip, seconds: float = TARGET_SECONDS) -> AudioClip:
    """Zero-pad or truncate at the end to exactly seconds * rate samples"""
    n = int(round(seconds * clip.sample_rate))
    x = clip.samples
    if len(x) == n:
        return clip
    if len(x) > n:
        return clip.with_samples(x[:n])
    return clip.with_samples(np.pad(x, (0, n - len(x))))


def canonicalize(clip: AudioClip, rate: int = TARGET_RATE, seconds: float = TARGET_SECONDS) -> AudioClip:
    """Mono, target rate, fixed duration"""
    return fix_duration(resample(to_mono(clip), rate), seconds)


def read_labels(corpus_dir: str) -> Dict[str, str]:
    """Read <corpus>/labels.csv into an id -> label mapping"""
    path = os.path.join(corpus_dir, 'labels.csv')
    if not os.path.exists(path):
        return {}
    frame = pd.read_csv(path, dtype=str)
    if list(frame.columns[:2]) != ['id', 'label']:
        raise DataError(f"{path}: expected header 'id,label'")
    labels = {}
    for clip_id, label in zip(frame['id'], frame['label']):
        label = str(label).strip().lower()
        if label not in LABELS:
            raise DataError(f"{path}: unknown label '{label}' for '{clip_id}'")
        labels[str(clip_id)] = label
    return labels


def write_labels(labels: Dict[str, str], corpus_dir: str):
    """Write labels.csv sorted by id"""
    frame = pd.DataFrame(sorted(labels.items()), columns=['id', 'label'])
    frame.to_csv(os.path.join(corpus_dir, 'labels.csv'), index=False, lineterminator='\n')


def load_corpus(corpus_dir: str, require_labels: bool = True) -> List[AudioClip]:
    """
    Load every <id>.wav in a corpus directory, sorted by id

    Args:
        corpus_dir: Directory with WAVs, optional sidecars and labels.csv
        require_labels: Fail on clips missing from labels.csv

    Returns:
        List of clips at native rate
    """
    if not os.path.isdir(corpus_dir):
        raise CorpusIoError(f"Corpus directory not found: {corpus_dir}")
    labels = read_labels(corpus_dir)
    clips = []
    for name in sorted(os.listdir(corpus_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() != '.wav':
            continue
        label = labels.get(stem)
        if label is None and require_labels:
            raise DataError(f"Clip '{stem}' has no row in labels.csv")
        clips.append(load_wav(os.path.join(corpus_dir, name), label=label, clip_id=stem))
    logger.info("Loaded %d clips from %s", len(clips), corpus_dir)
    return clips
