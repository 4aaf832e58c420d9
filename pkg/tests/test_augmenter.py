import numpy as np
import pytest
from pydantic import ValidationError

from processors.audio_processor import TestPartition, TrainPartition
from processors.augmenter import AugmentConfig, add_noise, augment_dataset, time_shift, time_stretch
from processors.dsp import fft_real
from utils.errors import InvalidHyperparameter, InvalidPartition, InvalidRange
from utils.seeding import make_rng
from tests.conftest import sine


def dominant_frequency(x, rate):
    size = 1 << (len(x) - 1).bit_length()
    spectrum = np.abs(fft_real(np.pad(x, (0, size - len(x)))))
    return np.argmax(spectrum) * rate / size


class TestStretch:
    def test_unit_factor_round_trip(self, make_clip):
        clip = make_clip(sine(440, 1.0))
        out = time_stretch(clip, 1.0)
        assert len(out.samples) == len(clip.samples)
        assert np.max(np.abs(out.samples - clip.samples)) < 1e-3

    def test_length_ratio(self, make_clip):
        out = time_stretch(make_clip(sine(440, 3.0)), 1.1)
        assert len(out.samples) / 22050 == pytest.approx(3.0 / 1.1, abs=1e-3)

    def test_pitch_preserved(self, make_clip):
        out = time_stretch(make_clip(sine(440, 3.0)), 1.1)
        assert dominant_frequency(out.samples, 22050) == pytest.approx(440, rel=0.02)

    def test_factor_must_be_positive(self, make_clip):
        with pytest.raises(InvalidRange):
            time_stretch(make_clip(np.zeros(4096)), 0.0)


class TestNoise:
    def test_zero_factor_identity(self, make_clip):
        clip = make_clip(np.ones(10))
        assert add_noise(clip, 0.0, make_rng(1, 'n')) is clip

    def test_noise_level(self, make_clip):
        out = add_noise(make_clip(np.zeros(66150)), 0.005, make_rng(1, 'n'))
        assert np.std(out.samples) == pytest.approx(0.005, rel=0.1)

    def test_same_seed_same_noise(self, make_clip):
        clip = make_clip(np.zeros(1000))
        a = add_noise(clip, 0.01, make_rng(9, 'n'))
        b = add_noise(clip, 0.01, make_rng(9, 'n'))
        np.testing.assert_array_equal(a.samples, b.samples)


class TestShift:
    def test_zero_fraction_identity(self, make_clip):
        clip = make_clip(np.arange(10.0))
        assert time_shift(clip, 0.0, make_rng(0, 's')) is clip

    def test_forced_right_shift(self, make_clip):
        out = time_shift(make_clip([1.0, 2, 3, 4, 5]), 0.5, shift=3)
        np.testing.assert_array_equal(out.samples, [0, 0, 0, 1, 2])

    def test_forced_left_shift(self, make_clip):
        out = time_shift(make_clip([1.0, 2, 3, 4, 5]), 0.5, shift=-2)
        np.testing.assert_array_equal(out.samples, [3, 4, 5, 0, 0])

    def test_drawn_shift_within_bounds(self, make_clip):
        x = np.zeros(1000)
        x[500] = 1.0
        out = time_shift(make_clip(x), 0.1, make_rng(3, 's'))
        assert abs(int(np.argmax(out.samples)) - 500) <= 100
        assert len(out.samples) == 1000

    def test_drawn_shift_needs_rng(self, make_clip):
        with pytest.raises(InvalidHyperparameter):
            time_shift(make_clip(np.ones(100)), 0.1)


class TestDataset:
    @pytest.fixture
    def train(self, make_clip):
        clips = [
            make_clip(sine(300 + 20 * i, 0.5), label='landing' if i % 2 else 'takeoff', clip_id=f"c{i}")
            for i in range(10)
        ]
        return TrainPartition(clips=tuple(clips))

    def test_one_copy_per_technique(self, train):
        out = augment_dataset(train, AugmentConfig(seed=1))
        assert len(out) == 40
        assert out.ids[:4] == ['c0', 'c0__stretch', 'c0__noise', 'c0__shift']
        assert all(c.label == train.clips[i // 4].label for i, c in enumerate(out))
        assert all(c.source_id == 'c0' for c in out.clips[1:4])

    def test_all_off_returns_input(self, train):
        config = AugmentConfig(enabled={'stretch': False, 'noise': False, 'shift': False})
        assert augment_dataset(train, config) is train

    def test_deterministic(self, train):
        a = augment_dataset(train, AugmentConfig(seed=5))
        b = augment_dataset(train, AugmentConfig(seed=5))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.samples, y.samples)

    def test_copies_keep_duration(self, train):
        out = augment_dataset(train, AugmentConfig(seed=2))
        assert {len(c.samples) for c in out} == {len(train.clips[0].samples)}

    def test_test_partition_rejected(self, train):
        with pytest.raises(InvalidPartition):
            augment_dataset(TestPartition(clips=train.clips), AugmentConfig())

    def test_config_bounds(self):
        with pytest.raises(ValidationError):
            AugmentConfig(max_shift_frac=1.0)
        with pytest.raises(ValidationError):
            AugmentConfig(enabled={'pitch': True})
