"""Synthetic labeled radio-call corpus"""
import logging
import math
import os
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from processors.audio_processor import LABELS, TARGET_RATE, AudioClip, write_labels, write_wav
from processors.dsp import fft_real, ifft_real
from utils.errors import CorpusIoError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

DEFAULT_PHRASES = {
    'landing': [
        "Turning crosswind for runway {runway}.",
        "Reduce speed and descend to {altitude} feet for landing.",
        "{callsign} on final for runway {runway}, full stop landing.",
        "{callsign} entering left downwind runway {runway} for landing.",
        "{callsign} turning base runway {runway}, landing.",
    ],
    'takeoff': [
        "Departing runway {runway} and staying in the pattern.",
        "Taxi into position and hold for takeoff.",
        "{callsign} departing runway {runway}, northbound departure.",
        "{callsign} taking off runway {runway}, departing to the west.",
        "{callsign} rolling runway {runway} for takeoff.",
    ],
}

AIRCRAFT = ('Cessna', 'Piper', 'Cirrus', 'Beechcraft', 'Mooney')
ALTITUDES = (1500, 2000, 2500, 3000)


class SynthSpec(BaseModel):
    """Recipe for a synthetic corpus"""

    n_clips: int = Field(200, ge=4)
    class_balance: float = Field(0.5, gt=0.0, lt=1.0)
    seed: int = Field(42, ge=0)
    sample_rate: int = Field(TARGET_RATE, gt=0)
    min_seconds: float = Field(2.0, gt=0.0)
    max_seconds: float = Field(3.5, le=4.0)
    lead_in_seconds: float = Field(0.2, ge=0.0)
    noise_level: float = Field(0.01, ge=0.0)
    tone_level: float = Field(0.3, gt=0.0, lt=1.0)
    landing_band: Tuple[float, float] = (300.0, 900.0)
    takeoff_band: Tuple[float, float] = (1500.0, 3000.0)
    phrase_bank: Dict[str, List[str]] = Field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_PHRASES.items()})

    @field_validator('phrase_bank')
    @classmethod
    def _phrases(cls, value: Dict[str, List[str]]) -> Dict[str, List[str]]:
        for label in LABELS:
            if not value.get(label):
                raise ValueError(f"phrase_bank needs at least one '{label}' template")
        return value

    @model_validator(mode='after')
    def _ranges(self):
        if self.min_seconds > self.max_seconds:
            raise ValueError("min_seconds must not exceed max_seconds")
        if self.lead_in_seconds >= self.min_seconds:
            raise ValueError("lead_in_seconds must be shorter than the shortest clip")
        for lo, hi in (self.landing_band, self.takeoff_band):
            if not 0 < lo < hi < self.sample_rate / 2:
                raise ValueError(f"tone band ({lo}, {hi}) must lie below Nyquist")
        return self

    @property
    def n_landing(self) -> int:
        return min(max(int(math.floor(self.n_clips * self.class_balance + 0.5)), 1), self.n_clips - 1)


def pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """1/f-power noise of unit RMS, shaped in the frequency domain"""
    size = 1 << max(1, (n - 1).bit_length())
    spectrum = fft_real(rng.standard_normal(size))
    bins = np.arange(len(spectrum), dtype=np.float64)
    shape = np.zeros_like(bins)
    shape[1:] = 1.0 / np.sqrt(bins[1:])
    noise = ifft_real(spectrum * shape, size)[:n]
    rms = np.sqrt(np.mean(noise ** 2))
    return noise / rms if rms > 0 else noise


def _tapered_tone(freq: float, n: int, rate: int, phase: float) -> np.ndarray:
    t = np.arange(n) / rate
    tone = np.sin(2.0 * np.pi * freq * t + phase)
    ramp = min(n // 2, int(0.01 * rate))
    if ramp > 0:
        edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        tone[:ramp] *= edge
        tone[n - ramp:] *= edge[::-1]
    return tone


class CorpusGenerator:
    """Writes WAV clips, sidecar transcripts and labels.csv from a SynthSpec"""

    def __init__(self, spec: SynthSpec):
        """
        Initialize generator

        Args:
            spec: SynthSpec with counts, seed, acoustic profile and phrase bank
        """
        self.spec = spec

    def labels(self) -> List[Tuple[str, str]]:
        """(id, label) pairs; label order is a seeded permutation"""
        spec = self.spec
        labels = ['landing'] * spec.n_landing + ['takeoff'] * (spec.n_clips - spec.n_landing)
        order = make_rng(spec.seed, 'datagen', 'labels').permutation(spec.n_clips)
        width = max(4, len(str(spec.n_clips - 1)))
        return [(f"clip_{i:0{width}d}", labels[j]) for i, j in enumerate(order)]

    def transcript(self, clip_id: str, label: str) -> str:
        """Fill a random template from the class's phrase bank"""
        rng = make_rng(self.spec.seed, 'datagen', 'text', clip_id)
        templates = self.spec.phrase_bank[label]
        template = templates[int(rng.integers(len(templates)))]
        digits = int(rng.integers(100, 1000))
        letters = ''.join(chr(ord('A') + int(v)) for v in rng.integers(0, 26, size=2))
        return template.format(
            runway=f"{int(rng.integers(1, 37)):02d}",
            callsign=f"{AIRCRAFT[int(rng.integers(len(AIRCRAFT)))]} {digits}{letters}",
            altitude=ALTITUDES[int(rng.integers(len(ALTITUDES)))],
        )

    def audio(self, clip_id: str, label: str) -> AudioClip:
        """
        Pink-noise bed with a noise-only lead-in, then a tone motif

        Landing motifs step down through the low band; takeoff motifs step
        up through the high band.
        """
        spec = self.spec
        rng = make_rng(spec.seed, 'datagen', 'audio', clip_id)
        rate = spec.sample_rate
        n = int(round(rng.uniform(spec.min_seconds, spec.max_seconds) * rate))
        samples = spec.noise_level * pink_noise(n, rng)

        lo, hi = spec.landing_band if label == 'landing' else spec.takeoff_band
        n_tones = int(rng.integers(3, 5))
        freqs = np.sort(rng.uniform(lo, hi, size=n_tones))
        if label == 'landing':
            freqs = freqs[::-1]

        start = int(round(spec.lead_in_seconds * rate))
        end = n - int(0.05 * rate)
        bounds = np.linspace(start, end, n_tones + 1).astype(np.int64)
        for freq, a, b in zip(freqs, bounds[:-1], bounds[1:]):
            samples[a:b] += spec.tone_level * _tapered_tone(freq, b - a, rate, rng.uniform(0, 2 * np.pi))

        return AudioClip(samples=np.clip(samples, -0.99, 0.99), sample_rate=rate, label=label, id=clip_id)

    def generate_clips(self) -> List[Tuple[AudioClip, str]]:
        """In-memory corpus as (clip, transcript) pairs"""
        return [(self.audio(cid, label), self.transcript(cid, label)) for cid, label in self.labels()]

    def generate_corpus(self, out_dir: str) -> dict:
        """
        Write <id>.wav, <id>.txt and labels.csv into out_dir

        Returns:
            Summary dictionary with clip counts per class
        """
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise CorpusIoError(f"Cannot create {out_dir}: {e}") from e

        labels = {}
        for clip, text in self.generate_clips():
            write_wav(clip, os.path.join(out_dir, f"{clip.id}.wav"))
            path = os.path.join(out_dir, f"{clip.id}.txt")
            try:
                with open(path, 'w', encoding='utf-8', newline='\n') as f:
                    f.write(text + '\n')
            except OSError as e:
                raise CorpusIoError(f"Cannot write {path}: {e}") from e
            labels[clip.id] = clip.label
        write_labels(labels, out_dir)

        counts = {label: sum(1 for v in labels.values() if v == label) for label in LABELS}
        logger.info("Generated %d clips in %s (%s)", len(labels), out_dir, counts)
        return {
            'success': True,
            'out_dir': out_dir,
            'n_clips': len(labels),
            'counts': counts,
            'seed': self.spec.seed,
        }


def generate_corpus(spec: SynthSpec, out_dir: str) -> dict:
    return CorpusGenerator(spec).generate_corpus(out_dir)
