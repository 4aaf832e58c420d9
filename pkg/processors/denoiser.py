"""Spectral-subtraction noise reduction"""
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, field_validator

from utils.errors import DimensionMismatch, EvenWidth, TooFewFrames
from .audio_processor import AudioClip
from .dsp import DEFAULT_HOP, DEFAULT_N_FFT, ComplexSpectrum, istft, stft

logger = logging.getLogger(__name__)


class DenoiseConfig(BaseModel):
    """Spectral subtraction settings"""

    enabled: bool = True
    noise_frames: int = Field(5, ge=1, description="Leading frames assumed to be noise only")
    smooth_width: int = Field(3, ge=1, description="Odd moving-average width in frames")
    n_fft: int = DEFAULT_N_FFT
    hop: int = DEFAULT_HOP
    smooth_first: bool = False

    @field_validator('smooth_width')
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise EvenWidth(f"Smoothing width must be odd and >= 1, got {value}")
        return value


@dataclass(frozen=True)
class NoiseProfile:
    """Per-bin mean noise magnitude |N(f)|"""

    magnitudes: np.ndarray
    frames_used: int

    def __post_init__(self):
        if self.frames_used < 1:
            raise TooFewFrames("A noise profile needs at least one frame")
        if np.any(self.magnitudes < 0) or not np.all(np.isfinite(self.magnitudes)):
            raise DimensionMismatch("Noise magnitudes must be finite and non-negative")


def estimate_noise_profile(spec: ComplexSpectrum, noise_frames: int) -> NoiseProfile:
    """
    Average magnitude of the first noise_frames frames

    Args:
        spec: Noisy spectrum
        noise_frames: Number of leading frames T, 1 <= T <= n_frames

    Returns:
        NoiseProfile
    """
    if noise_frames < 1 or noise_frames > spec.n_frames:
        raise TooFewFrames(
            f"Noise estimate needs 1 <= T <= {spec.n_frames} frames, got {noise_frames}"
        )
    magnitudes = np.abs(spec.frames[:noise_frames]).mean(axis=0)
    return NoiseProfile(magnitudes=magnitudes, frames_used=noise_frames)


def spectral_subtract(spec: ComplexSpectrum, profile: NoiseProfile) -> ComplexSpectrum:
    """Clamp |X| - |N| at zero and keep the original phase"""
    if len(profile.magnitudes) != spec.n_bins:
        raise DimensionMismatch(
            f"Profile has {len(profile.magnitudes)} bins, spectrum has {spec.n_bins}"
        )
    magnitude = np.abs(spec.frames)
    cleaned = np.maximum(magnitude - profile.magnitudes, 0.0)
    return spec.with_frames(_rescale(spec.frames, magnitude, cleaned))


def _rescale(frames: np.ndarray, magnitude: np.ndarray, target: np.ndarray) -> np.ndarray:
    # zero-magnitude bins have no phase; they take phase 0
    safe = np.where(magnitude > 0, magnitude, 1.0)
    return np.where(magnitude > 0, frames * (target / safe), target.astype(np.complex128))


def smooth_magnitudes(spec: ComplexSpectrum, width: int) -> ComplexSpectrum:
    """
    Moving average of magnitudes across frames, truncated at the edges

    Args:
        spec: Spectrum to smooth
        width: Odd window width in frames

    Returns:
        Spectrum with smoothed magnitudes and unchanged phase
    """
    if width < 1 or width % 2 == 0:
        raise EvenWidth(f"Smoothing width must be odd and >= 1, got {width}")
    if width == 1:
        return spec.with_frames(spec.frames.copy())

    magnitude = np.abs(spec.frames)
    n = spec.n_frames
    half = width // 2
    cumulative = np.vstack([np.zeros((1, spec.n_bins)), np.cumsum(magnitude, axis=0)])
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(np.arange(n) + half + 1, 0, n)
    smoothed = (cumulative[hi] - cumulative[lo]) / (hi - lo)[:, None]
    return spec.with_frames(_rescale(spec.frames, magnitude, smoothed))


def denoise(clip: AudioClip, config: DenoiseConfig = None) -> AudioClip:
    """
    STFT -> noise profile -> subtraction -> smoothing -> ISTFT

    Args:
        clip: Mono clip whose first frames contain only background noise
        config: DenoiseConfig

    Returns:
        Clip of the same length
    """
    config = config or DenoiseConfig()
    if not config.enabled:
        return clip
    spec = stft(clip.samples, n_fft=config.n_fft, hop=config.hop)
    profile = estimate_noise_profile(spec, min(config.noise_frames, spec.n_frames))
    if config.smooth_first:
        cleaned = spectral_subtract(smooth_magnitudes(spec, config.smooth_width), profile)
    else:
        cleaned = smooth_magnitudes(spectral_subtract(spec, profile), config.smooth_width)
    logger.debug("Denoised '%s' with %d noise frames", clip.id, profile.frames_used)
    return clip.with_samples(istft(cleaned, length=len(clip.samples)))
