"""Training-time audio augmentation: time stretch, Gaussian noise, shift"""
import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from utils.errors import InvalidHyperparameter, InvalidPartition, InvalidRange
from utils.seeding import make_rng
from .audio_processor import (
    TARGET_RATE,
    AudioClip,
    TrainPartition,
    fix_duration,
    resample,
    to_mono,
)
from .dsp import DEFAULT_HOP, DEFAULT_N_FFT, istft, stft

logger = logging.getLogger(__name__)

TECHNIQUES = ('stretch', 'noise', 'shift')


class AugmentConfig(BaseModel):
    """Augmentation parameters"""

    stretch_factor: float = Field(1.1, gt=0.0)
    noise_factor: float = Field(0.005, ge=0.0)
    max_shift_frac: float = Field(0.10, ge=0.0, lt=1.0)
    seed: int = Field(42, ge=0)
    enabled: Dict[str, bool] = Field(default_factory=lambda: {t: True for t in TECHNIQUES})

    @field_validator('enabled')
    @classmethod
    def _known(cls, value: Dict[str, bool]) -> Dict[str, bool]:
        unknown = set(value) - set(TECHNIQUES)
        if unknown:
            raise ValueError(f"Unknown augmentation techniques: {sorted(unknown)}")
        return {t: bool(value.get(t, False)) for t in TECHNIQUES}

    @property
    def active(self) -> List[str]:
        return [t for t in TECHNIQUES if self.enabled.get(t)]


def time_stretch(
    clip: AudioClip,
    factor: float,
    n_fft: int = DEFAULT_N_FFT,
    hop: int = DEFAULT_HOP,
) -> AudioClip:
    """
    Phase-vocoder speed change that keeps pitch

    Args:
        clip: Mono clip
        factor: Speed ratio; 1.1 plays 10% faster
        n_fft: Analysis frame length
        hop: Analysis hop

    Returns:
        Clip of round(len / factor) samples (not re-padded)
    """
    if factor <= 0:
        raise InvalidRange(f"Stretch factor must be positive, got {factor}")
    spec = stft(clip.samples, n_fft=n_fft, hop=hop)
    frames = spec.frames
    n_bins = spec.n_bins

    padded = np.vstack([frames, np.zeros((2, n_bins), dtype=frames.dtype)])
    expected_advance = 2.0 * np.pi * hop * np.arange(n_bins) / n_fft
    steps = np.arange(0.0, spec.n_frames, factor)

    out = np.empty((len(steps), n_bins), dtype=np.complex128)
    phase = np.angle(frames[0])
    for i, step in enumerate(steps):
        k = int(step)
        left, right = padded[k], padded[k + 1]
        alpha = step - k
        magnitude = (1.0 - alpha) * np.abs(left) + alpha * np.abs(right)
        out[i] = magnitude * np.exp(1j * phase)

        delta = np.angle(right) - np.angle(left) - expected_advance
        delta -= 2.0 * np.pi * np.round(delta / (2.0 * np.pi))
        phase = phase + expected_advance + delta

    length = int(round(len(clip.samples) / factor))
    return clip.with_samples(istft(spec.with_frames(out, length=length)))


def add_noise(clip: AudioClip, noise_factor: float, rng: np.random.Generator) -> AudioClip:
    """Add noise_factor times i.i.d. standard normal noise"""
    if noise_factor < 0:
        raise InvalidRange(f"noise_factor must be >= 0, got {noise_factor}")
    if noise_factor == 0:
        return clip
    return clip.with_samples(clip.samples + noise_factor * rng.standard_normal(len(clip.samples)))


def time_shift(
    clip: AudioClip,
    max_frac: float,
    rng: Optional[np.random.Generator] = None,
    shift: Optional[int] = None,
) -> AudioClip:
    """
    Move samples right by s (left if negative) with zero fill, no wraparound

    Args:
        clip: Clip to shift
        max_frac: Shift drawn uniformly from [-max_frac*len, +max_frac*len]
        rng: Generator used when shift is not forced
        shift: Explicit shift in samples

    Returns:
        Clip of unchanged length
    """
    if not 0.0 <= max_frac < 1.0:
        raise InvalidRange(f"max_frac must be in [0, 1), got {max_frac}")
    x = clip.samples
    n = len(x)
    if shift is None:
        if rng is None:
            raise InvalidHyperparameter("time_shift needs an rng when no explicit shift is given")
        limit = int(max_frac * n)
        shift = int(rng.integers(-limit, limit + 1)) if limit > 0 else 0
    if shift == 0:
        return clip
    out = np.zeros_like(x)
    if abs(shift) < n:
        if shift > 0:
            out[shift:] = x[:n - shift]
        else:
            out[:n + shift] = x[-shift:]
    return clip.with_samples(out)


def _augment_clip(clip: AudioClip, technique: str, config: AugmentConfig) -> AudioClip:
    base = resample(to_mono(clip), TARGET_RATE)
    rng = make_rng(config.seed, 'augment', technique, clip.id)
    if technique == 'stretch':
        out = fix_duration(time_stretch(base, config.stretch_factor), base.duration)
    elif technique == 'noise':
        out = add_noise(base, config.noise_factor, rng)
    else:
        out = time_shift(base, config.max_shift_frac, rng)
    return out.with_samples(out.samples, id=f"{clip.id}__{technique}", source_id=clip.transcript_id)


def augment_dataset(train_set: TrainPartition, config: AugmentConfig) -> TrainPartition:
    """
    Original clips plus one augmented copy per enabled technique

    Labels are copied; augmented copies keep the source transcript id.

    Args:
        train_set: Training partition (test partitions are rejected)
        config: AugmentConfig

    Returns:
        TrainPartition
    """
    if not isinstance(train_set, TrainPartition):
        raise InvalidPartition(
            f"Augmentation only accepts a TrainPartition, got {type(train_set).__name__}"
        )
    techniques = config.active
    if not techniques:
        return train_set

    clips = []
    for clip in train_set:
        clips.append(clip)
        for technique in techniques:
            clips.append(_augment_clip(clip, technique, config))
    logger.info("Augmented %d training clips to %d (%s)", len(train_set), len(clips), ', '.join(techniques))
    return TrainPartition(clips=tuple(clips))
