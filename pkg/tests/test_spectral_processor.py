import numpy as np
import pytest

from processors.audio_processor import AudioClip
from processors.denoiser import DenoiseConfig
from processors.spectral_processor import (
    Spectrogram,
    build_mel_filterbank,
    flatten_spectrogram,
    hz_to_mel,
    mel_spectrogram,
    mel_to_hz,
    normalize_minmax,
    normalize_variant,
    pool_spectrogram,
    power_to_db,
    read_spectrogram,
    spectral_pipeline,
    stack_spectrograms,
    write_spectrogram,
)
from utils.errors import DataError, InvalidRange, NegativeInput
from tests.conftest import sine


@pytest.fixture(scope='module')
def bank():
    return build_mel_filterbank(128, 2048, 22050)


class TestMelScale:
    def test_700_hz(self):
        assert hz_to_mel(700.0) == pytest.approx(2595 * np.log10(2), abs=1e-9)
        assert hz_to_mel(700.0) == pytest.approx(781.17, abs=0.01)

    def test_inverse(self):
        np.testing.assert_allclose(mel_to_hz(hz_to_mel([0.0, 440.0, 8000.0])), [0.0, 440.0, 8000.0], atol=1e-9)


class TestFilterBank:
    def test_shape_and_peaks(self, bank):
        assert bank.weights.shape == (128, 1025)
        assert np.all(bank.weights >= 0)
        covered = bank.weights.max(axis=1) > 0
        np.testing.assert_allclose(bank.weights[covered].max(axis=1), 1.0)

    def test_single_band_peaks_mid_mel(self):
        single = build_mel_filterbank(1, 2048, 22050, 0.0, None)
        centre = mel_to_hz(hz_to_mel(11025.0) / 2)
        peak_freq = np.argmax(single.weights[0]) * 22050 / 2048
        assert abs(peak_freq - centre) <= 22050 / 2048

    def test_bad_range(self):
        with pytest.raises(InvalidRange):
            build_mel_filterbank(128, 2048, 22050, fmin=5000, fmax=4000)


class TestMelSpectrogram:
    def test_silence(self, bank, make_clip):
        spec = mel_spectrogram(make_clip(np.zeros(66150)), bank)
        assert spec.shape == (128, 130)
        assert np.all(spec.values == 0)

    def test_white_noise_has_energy_everywhere(self, bank, make_clip):
        noise = np.random.default_rng(0).standard_normal(66150)
        spec = mel_spectrogram(make_clip(noise), bank)
        assert np.all(spec.values.sum(axis=0) > 0)

    def test_sine_lands_in_nearest_band(self, bank, make_clip):
        spec = mel_spectrogram(make_clip(sine(1000, 3.0)), bank)
        band = int(np.argmax(spec.values.mean(axis=1)))
        nearest = int(np.argmin(np.abs(bank.centers - 1000.0)))
        assert abs(band - nearest) <= 1


class TestScaling:
    def test_power_to_db(self):
        spec = Spectrogram(values=np.array([[1.0, 0.0, 100.0]]))
        db = power_to_db(spec, eps=1e-10).values[0]
        assert db[0] == pytest.approx(0.0, abs=1e-8)
        assert db[1] == pytest.approx(-100.0)
        assert db[2] == pytest.approx(20.0)

    def test_negative_power_rejected(self):
        with pytest.raises(NegativeInput):
            power_to_db(Spectrogram(values=np.array([[-1.0]])))

    def test_minmax(self):
        out = normalize_minmax(Spectrogram(values=np.array([[-80.0, -30.0, 20.0]]), scale='db'))
        np.testing.assert_allclose(out.values, [[0.0, 0.5, 1.0]])
        assert out.scale == 'normalized'

    def test_constant_maps_to_zero(self):
        out = normalize_minmax(Spectrogram(values=np.full((2, 2), 7.0)))
        assert np.all(out.values == 0)


class TestPipeline:
    @pytest.mark.parametrize('variant', ['mel', 'log-mel'])
    def test_contract(self, variant):
        clip = AudioClip(samples=sine(600, 2.2, rate=16000) + 0.01, sample_rate=16000, id='p')
        spec = spectral_pipeline(clip, variant)
        assert spec.shape == (128, 130)
        assert spec.values.min() >= 0.0
        assert spec.values.max() <= 1.0

    def test_deterministic(self, make_clip):
        noise = np.random.default_rng(1).standard_normal(30000) * 0.1
        a = spectral_pipeline(make_clip(noise), 'log_mel', denoise_config=DenoiseConfig())
        b = spectral_pipeline(make_clip(noise.copy()), 'log_mel', denoise_config=DenoiseConfig())
        np.testing.assert_array_equal(a.values, b.values)

    def test_variant_spellings(self):
        assert normalize_variant('log-mel') == 'log_mel'
        assert normalize_variant('LogMel') == 'log_mel'
        with pytest.raises(InvalidRange):
            normalize_variant('bark')

    def test_stacked_tensor_shape(self):
        specs = [Spectrogram(values=np.zeros((128, 130)), scale='normalized') for _ in range(3)]
        assert stack_spectrograms(specs).shape == (3, 128, 130, 1)


class TestReductions:
    def test_pool_zeros(self):
        vec = pool_spectrogram(Spectrogram(values=np.zeros((128, 130))))
        assert vec.dim == 256
        assert np.all(vec.values == 0)

    def test_pool_constant(self):
        vec = pool_spectrogram(Spectrogram(values=np.full((128, 130), 0.5)))
        np.testing.assert_allclose(vec.values[:128], 0.5)
        np.testing.assert_allclose(vec.values[128:], 0.0, atol=1e-15)

    def test_pool_toy(self):
        vec = pool_spectrogram(Spectrogram(values=np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 6.0]])))
        np.testing.assert_allclose(vec.values, [2.0, 2.0, np.sqrt(2 / 3), np.sqrt(8.0)])

    def test_flatten(self):
        vec = flatten_spectrogram(Spectrogram(values=np.arange(6.0).reshape(2, 3)))
        np.testing.assert_array_equal(vec.values, np.arange(6.0))


class TestCacheFile:
    def test_write_read(self, tmp_path):
        values = np.random.default_rng(2).random((128, 130))
        path = str(tmp_path / 'c.mels')
        write_spectrogram(Spectrogram(values=values, scale='normalized'), path)
        assert open(path, 'rb').read(4) == b'MELS'
        back = read_spectrogram(path, 'c')
        assert back.scale == 'normalized'
        np.testing.assert_allclose(back.values, values, rtol=1e-6)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / 'bad.mels'
        path.write_bytes(b'NOPE' + bytes(20))
        with pytest.raises(DataError):
            read_spectrogram(str(path))


def test_minmax_ignores_affine_rescaling():
    rng = np.random.default_rng(6)
    for _ in range(100):
        values = rng.standard_normal((8, 5))
        scale, shift = rng.uniform(0.1, 10.0), rng.uniform(-50.0, 50.0)
        a = normalize_minmax(Spectrogram(values=values)).values
        b = normalize_minmax(Spectrogram(values=scale * values + shift)).values
        np.testing.assert_allclose(a, b, atol=1e-9)
