"""FFT and short-time Fourier transform primitives"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from utils.errors import (
    DimensionMismatch,
    InvalidRange,
    NonCOLAConfiguration,
    NonPowerOfTwo,
)

DEFAULT_N_FFT = 2048
DEFAULT_HOP = 512
COLA_TOLERANCE = 1e-8


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=None)
def _twiddles(n: int) -> np.ndarray:
    table = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    table.setflags(write=False)
    return table


def _fft(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 FFT over the last axis"""
    n = x.shape[-1]
    if not _is_power_of_two(n):
        raise NonPowerOfTwo(f"FFT length must be a power of two, got {n}")
    lead = x.shape[:-1]
    a = np.asarray(x, dtype=np.complex128)[..., _bit_reversal(n)]
    table = _twiddles(n)
    size = 2
    while size <= n:
        half = size // 2
        w = table[:: n // size][:half]
        a = a.reshape(lead + (n // size, size))
        even = a[..., :half]
        odd = a[..., half:] * w
        a = np.concatenate([even + odd, even - odd], axis=-1)
        size *= 2
    return a.reshape(lead + (n,))


def fft_real(signal: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    """
    Forward FFT of a real signal, non-negative frequencies only

    Args:
        signal: Real samples along the last axis (leading axes are batched)
        n: Transform length, a power of two equal to the signal length

    Returns:
        Complex array with n/2 + 1 bins on the last axis
    """
    signal = np.asarray(signal, dtype=np.float64)
    n = signal.shape[-1] if n is None else n
    if not _is_power_of_two(n):
        raise NonPowerOfTwo(f"FFT length must be a power of two, got {n}")
    if signal.shape[-1] != n:
        raise DimensionMismatch(f"Signal length {signal.shape[-1]} != FFT length {n}")
    return _fft(signal)[..., : n // 2 + 1]


def ifft_real(bins: np.ndarray, n: int) -> np.ndarray:
    """
    Inverse of fft_real: rebuild the Hermitian spectrum and transform back

    Args:
        bins: n/2 + 1 complex bins on the last axis
        n: Output length (power of two)

    Returns:
        Real samples of length n
    """
    bins = np.asarray(bins, dtype=np.complex128)
    if bins.shape[-1] != n // 2 + 1:
        raise DimensionMismatch(f"Expected {n // 2 + 1} bins, got {bins.shape[-1]}")
    full = np.concatenate([bins, np.conj(bins[..., n // 2 - 1:0:-1])], axis=-1)
    return np.real(np.conj(_fft(np.conj(full)))) / n


@lru_cache(maxsize=None)
def _hann(n: int) -> np.ndarray:
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    window.setflags(write=False)
    return window


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length n"""
    return _hann(n).copy()


@dataclass
class ComplexSpectrum:
    """STFT frames (n_frames, n_fft/2 + 1) plus the analysis settings"""

    frames: np.ndarray
    n_fft: int
    hop: int
    window: np.ndarray
    centered: bool = True
    length: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[1] != self.n_fft // 2 + 1:
            raise DimensionMismatch(
                f"Frames must have n_fft/2 + 1 = {self.n_fft // 2 + 1} bins, "
                f"got shape {self.frames.shape}"
            )
        _validate_analysis(self.n_fft, self.hop, self.window)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.frames)

    def with_frames(self, frames: np.ndarray, length: Optional[int] = None) -> "ComplexSpectrum":
        """Copy of this spectrum with replaced frames"""
        return ComplexSpectrum(
            frames=frames,
            n_fft=self.n_fft,
            hop=self.hop,
            window=self.window,
            centered=self.centered,
            length=self.length if length is None else length,
            meta=dict(self.meta),
        )


def _validate_analysis(n_fft: int, hop: int, window: np.ndarray):
    if not _is_power_of_two(n_fft):
        raise NonPowerOfTwo(f"n_fft must be a power of two, got {n_fft}")
    if hop <= 0 or hop > n_fft:
        raise InvalidRange(f"hop must be in (0, n_fft], got {hop}")
    if len(window) != n_fft:
        raise DimensionMismatch(f"Window length {len(window)} != n_fft {n_fft}")
    if np.any(window < 0.0) or np.any(window > 1.0):
        raise InvalidRange("Window weights must lie in [0, 1]")


def stft(
    samples: np.ndarray,
    n_fft: int = DEFAULT_N_FFT,
    hop: int = DEFAULT_HOP,
    window: Optional[np.ndarray] = None,
    centered: bool = True,
) -> ComplexSpectrum:
    """
    Short-time Fourier transform

    When centered, the signal is reflect-padded by n_fft/2 on each side so
    frame t is centered on sample t*hop and there are 1 + len//hop frames.

    Args:
        samples: Mono real signal
        n_fft: Frame length (power of two)
        hop: Frame advance in samples
        window: Analysis window, defaults to periodic Hann
        centered: Reflect-pad so frames are centered

    Returns:
        ComplexSpectrum
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) < 1:
        raise DimensionMismatch("stft expects a non-empty 1-D signal")
    window = _hann(n_fft) if window is None else np.asarray(window, dtype=np.float64)
    _validate_analysis(n_fft, hop, window)

    length = len(samples)
    if centered:
        padded = np.pad(samples, n_fft // 2, mode="reflect") if length > 1 else np.pad(
            samples, n_fft // 2, mode="edge"
        )
        n_frames = 1 + length // hop
    else:
        padded = samples if length >= n_fft else np.pad(samples, (0, n_fft - length))
        n_frames = 1 + (len(padded) - n_fft) // hop

    segments = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop][:n_frames]
    frames = fft_real(segments * window, n_fft)
    return ComplexSpectrum(
        frames=frames,
        n_fft=n_fft,
        hop=hop,
        window=window,
        centered=centered,
        length=length,
    )


def check_cola(window: np.ndarray, hop: int) -> float:
    """
    Relative deviation of the squared-window overlap-add from a constant

    Returns:
        max |envelope - mean| / mean over one hop period
    """
    squared = np.asarray(window, dtype=np.float64) ** 2
    n_fft = len(squared)
    envelope = np.zeros(hop)
    for start in range(0, n_fft, hop):
        chunk = squared[start:start + hop]
        envelope[: len(chunk)] += chunk
    mean = envelope.mean()
    if mean <= 0.0:
        return np.inf
    return float(np.max(np.abs(envelope - mean)) / mean)


def istft(spec: ComplexSpectrum, length: Optional[int] = None) -> np.ndarray:
    """
    Inverse STFT by windowed overlap-add with squared-window normalization

    Args:
        spec: Spectrum from stft (possibly modified)
        length: Output length; defaults to the analysed signal length

    Returns:
        Real signal
    """
    deviation = check_cola(spec.window, spec.hop)
    if deviation > COLA_TOLERANCE:
        raise NonCOLAConfiguration(
            f"Window/hop pair (n_fft={spec.n_fft}, hop={spec.hop}) is not "
            f"constant-overlap-add (deviation {deviation:.3g})"
        )
    length = spec.length if length is None else length
    n_fft, hop = spec.n_fft, spec.hop

    frames_time = ifft_real(spec.frames, n_fft) * spec.window
    total = n_fft + hop * (spec.n_frames - 1)
    signal = np.zeros(total)
    envelope = np.zeros(total)
    squared = spec.window ** 2
    for t in range(spec.n_frames):
        start = t * hop
        signal[start:start + n_fft] += frames_time[t]
        envelope[start:start + n_fft] += squared

    nonzero = envelope > 1e-11 * envelope.max()
    signal[nonzero] /= envelope[nonzero]
    signal[~nonzero] = 0.0

    offset = n_fft // 2 if spec.centered else 0
    out = signal[offset:offset + length]
    if len(out) < length:
        out = np.pad(out, (0, length - len(out)))
    return out
