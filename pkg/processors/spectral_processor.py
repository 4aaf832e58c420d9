"""Mel filterbank, (Log-)Mel spectrograms and the on-disk feature cache"""
import logging
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from utils.errors import DataError, InvalidRange, NegativeInput, ShapeMismatch
from .audio_processor import TARGET_RATE, TARGET_SECONDS, AudioClip, canonicalize
from .denoiser import DenoiseConfig, denoise
from .dsp import DEFAULT_HOP, DEFAULT_N_FFT, stft
from .text_processor import FeatureVector

logger = logging.getLogger(__name__)

N_MELS = 128
N_FRAMES = 130
DB_EPS = 1e-10

CACHE_MAGIC = b'MELS'
CACHE_VERSION = 1
_HEADER = struct.Struct('<4sHHHB')
SCALE_CODES = {'power': 0, 'db': 1, 'normalized': 2}
SCALE_NAMES = {code: name for name, code in SCALE_CODES.items()}

VARIANTS = ('mel', 'log_mel')


def normalize_variant(variant: str) -> str:
    """Accept 'log-mel' / 'log_mel' / 'logmel' spellings"""
    key = variant.strip().lower().replace('-', '_')
    if key == 'logmel':
        key = 'log_mel'
    if key not in VARIANTS:
        raise InvalidRange(f"Unknown spectral variant '{variant}' (mel or log-mel)")
    return key


class SpectralConfig(BaseModel):
    """Spectral feature contract"""

    sample_rate: int = TARGET_RATE
    seconds: float = TARGET_SECONDS
    n_fft: int = DEFAULT_N_FFT
    hop: int = DEFAULT_HOP
    n_mels: int = N_MELS
    n_frames: int = N_FRAMES
    fmin: float = Field(0.0, ge=0.0)
    fmax: Optional[float] = None
    eps: float = DB_EPS
    variant: str = 'mel'
    traditional_features: str = 'pooled'

    @field_validator('variant')
    @classmethod
    def _variant(cls, value: str) -> str:
        return normalize_variant(value)

    @field_validator('traditional_features')
    @classmethod
    def _traditional(cls, value: str) -> str:
        if value not in ('pooled', 'flattened'):
            raise ValueError("traditional_features must be 'pooled' or 'flattened'")
        return value


def hz_to_mel(freq):
    """HTK mel scale"""
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterBank:
    """Triangular mel filters, one row per band, peak-normalized to 1"""

    weights: np.ndarray
    centers: np.ndarray
    fmin: float
    fmax: float
    sample_rate: int
    n_fft: int
    scale_variant: str = 'htk'

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


def build_mel_filterbank(
    n_mels: int = N_MELS,
    n_fft: int = DEFAULT_N_FFT,
    sample_rate: int = TARGET_RATE,
    fmin: float = 0.0,
    fmax: Optional[float] = None,
) -> MelFilterBank:
    """
    Build n_mels triangular filters between fmin and fmax

    Breakpoints are n_mels + 2 points equally spaced in mel; filter m rises
    from breakpoint m-1 to m and falls to m+1.

    Args:
        n_mels: Number of bands
        n_fft: FFT size (n_fft/2 + 1 bins)
        sample_rate: Sample rate in Hz
        fmin: Lowest edge in Hz
        fmax: Highest edge in Hz, defaults to Nyquist

    Returns:
        MelFilterBank with weights of shape (n_mels, n_fft/2 + 1)
    """
    nyquist = sample_rate / 2.0
    fmax = nyquist if fmax is None else float(fmax)
    if not (0.0 <= fmin < fmax <= nyquist) or n_mels < 1:
        raise InvalidRange(
            f"Need 0 <= fmin < fmax <= {nyquist} and n_mels >= 1, got "
            f"fmin={fmin}, fmax={fmax}, n_mels={n_mels}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_freqs[None, :] - lower) / (center - lower)
    falling = (upper - bin_freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    peaks = weights.max(axis=1)
    empty = peaks <= 0.0
    if np.any(empty):
        logger.warning("%d mel filters cover no FFT bin", int(empty.sum()))
    weights[~empty] /= peaks[~empty, None]

    weights.setflags(write=False)
    return MelFilterBank(
        weights=weights,
        centers=edges[1:-1],
        fmin=float(fmin),
        fmax=fmax,
        sample_rate=sample_rate,
        n_fft=n_fft,
    )


@lru_cache(maxsize=8)
def cached_filterbank(n_mels: int, n_fft: int, sample_rate: int, fmin: float, fmax: Optional[float]) -> MelFilterBank:
    return build_mel_filterbank(n_mels, n_fft, sample_rate, fmin, fmax)


@dataclass(frozen=True)
class Spectrogram:
    """(n_mels, n_frames) time-frequency matrix"""

    values: np.ndarray
    scale: str = 'power'
    clip_id: str = ""

    def __post_init__(self):
        if self.scale not in SCALE_CODES:
            raise DataError(f"Unknown spectrogram scale '{self.scale}'")

    @property
    def shape(self):
        return self.values.shape


def _fit_frames(values: np.ndarray, n_frames: int) -> np.ndarray:
    if values.shape[1] >= n_frames:
        return values[:, :n_frames]
    return np.pad(values, ((0, 0), (0, n_frames - values.shape[1])))


def mel_spectrogram(
    clip: AudioClip,
    bank: MelFilterBank,
    n_fft: int = DEFAULT_N_FFT,
    hop: int = DEFAULT_HOP,
    n_frames: int = N_FRAMES,
) -> Spectrogram:
    """Power mel spectrogram, time axis forced to n_frames"""
    if bank.n_fft != n_fft:
        raise ShapeMismatch(f"Filterbank built for n_fft={bank.n_fft}, not {n_fft}")
    spec = stft(clip.samples, n_fft=n_fft, hop=hop)
    power = np.abs(spec.frames) ** 2
    values = bank.weights @ power.T
    return Spectrogram(values=_fit_frames(values, n_frames), scale='power', clip_id=clip.id)


def power_to_db(spec: Spectrogram, eps: float = DB_EPS) -> Spectrogram:
    """10 * log10(S + eps)"""
    if np.any(spec.values < 0):
        raise NegativeInput(f"Power spectrogram '{spec.clip_id}' has negative values")
    return Spectrogram(values=10.0 * np.log10(spec.values + eps), scale='db', clip_id=spec.clip_id)


def normalize_minmax(spec: Spectrogram) -> Spectrogram:
    """Affine map onto [0, 1]; constant input maps to zeros"""
    values = spec.values
    lo, hi = values.min(), values.max()
    if hi > lo:
        out = (values - lo) / (hi - lo)
    else:
        out = np.zeros_like(values)
    return Spectrogram(values=out, scale='normalized', clip_id=spec.clip_id)


def spectral_pipeline(
    clip: AudioClip,
    variant: str = 'mel',
    config: Optional[SpectralConfig] = None,
    denoise_config: Optional[DenoiseConfig] = None,
) -> Spectrogram:
    """
    Raw clip to a normalized 128x130 spectrogram

    Args:
        clip: Clip at any rate and length
        variant: 'mel' (power) or 'log_mel' (dB) before normalization
        config: SpectralConfig
        denoise_config: Applied to the canonical clip when enabled

    Returns:
        Normalized Spectrogram
    """
    config = config or SpectralConfig()
    variant = normalize_variant(variant)
    clip = canonicalize(clip, config.sample_rate, config.seconds)
    if denoise_config is not None and denoise_config.enabled:
        clip = denoise(clip, denoise_config)
    bank = cached_filterbank(config.n_mels, config.n_fft, config.sample_rate, config.fmin, config.fmax)
    spec = mel_spectrogram(clip, bank, config.n_fft, config.hop, config.n_frames)
    if variant == 'log_mel':
        spec = power_to_db(spec, config.eps)
    return normalize_minmax(spec)


def pool_spectrogram(spec: Spectrogram) -> FeatureVector:
    """Per-band mean followed by per-band standard deviation over time"""
    values = spec.values
    return FeatureVector(values=np.concatenate([values.mean(axis=1), values.std(axis=1)]))


def flatten_spectrogram(spec: Spectrogram) -> FeatureVector:
    return FeatureVector(values=spec.values.reshape(-1).astype(np.float64))


def stack_spectrograms(specs: Iterable[Spectrogram]) -> np.ndarray:
    """Dataset tensor of shape (N, n_mels, n_frames, 1)"""
    arrays = [s.values for s in specs]
    if not arrays:
        return np.zeros((0, N_MELS, N_FRAMES, 1))
    return np.stack(arrays)[..., None]


def write_spectrogram(spec: Spectrogram, path: str):
    """Write the 'MELS' binary: header then row-major little-endian float32"""
    rows, cols = spec.values.shape
    header = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, rows, cols, SCALE_CODES[spec.scale])
    with open(path, 'wb') as f:
        f.write(header)
        f.write(np.ascontiguousarray(spec.values, dtype='<f4').tobytes())


def read_spectrogram(path: str, clip_id: str = "") -> Spectrogram:
    """Read a 'MELS' cache file"""
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated feature header")
    magic, version, rows, cols, scale = _HEADER.unpack(data[:_HEADER.size])
    if magic != CACHE_MAGIC or version != CACHE_VERSION or scale not in SCALE_NAMES:
        raise DataError(f"{path}: not a version-{CACHE_VERSION} MELS file")
    body = data[_HEADER.size:]
    if len(body) != rows * cols * 4:
        raise DataError(f"{path}: expected {rows * cols} float32 values")
    values = np.frombuffer(body, dtype='<f4').reshape(rows, cols).astype(np.float64)
    return Spectrogram(values=values, scale=SCALE_NAMES[scale], clip_id=clip_id)
