import numpy as np
import pytest
import requests

from processors.asr_processor import (
    FixtureAsrProvider,
    HttpAsrProvider,
    SidecarAsrProvider,
    build_asr_provider,
    transcribe,
)
from utils.errors import AsrServiceError, ConfigError, MissingTranscript


class FakeResponse:
    def __init__(self, status_code, payload=None, raw=None):
        self.status_code = status_code
        self._payload = payload
        self._raw = raw

    def json(self):
        if self._raw is not None:
            raise ValueError("not json")
        return self._payload


@pytest.fixture
def clip(make_clip):
    return make_clip(np.zeros(800), rate=8000, clip_id='c1')


class TestFixture:
    def test_tokens(self, clip):
        out = transcribe(clip, FixtureAsrProvider({'c1': 'turning crosswind'}))
        assert out.tokens == ['turning', 'crosswind']
        assert out.clip_id == 'c1'

    def test_missing(self, clip):
        with pytest.raises(MissingTranscript):
            transcribe(clip, FixtureAsrProvider({}))

    def test_augmented_copy_uses_source_text(self, make_clip):
        copy = make_clip(np.zeros(10), clip_id='c1__noise')
        copy = copy.with_samples(copy.samples, source_id='c1')
        out = transcribe(copy, FixtureAsrProvider({'c1': 'on final'}))
        assert out.clip_id == 'c1__noise'
        assert out.tokens == ['on', 'final']


class TestSidecar:
    def test_reads_text_file(self, tmp_path, clip):
        (tmp_path / 'c1.txt').write_text('Departing runway 27.\n', encoding='utf-8')
        out = transcribe(clip, SidecarAsrProvider(str(tmp_path)))
        assert out.tokens == ['departing', 'runway', '27']

    def test_missing_file(self, tmp_path, clip):
        with pytest.raises(MissingTranscript):
            transcribe(clip, SidecarAsrProvider(str(tmp_path)))


class TestHttp:
    def test_posts_wav_and_parses(self, monkeypatch, clip):
        seen = {}

        def fake_post(url, data, headers, timeout):
            seen.update(url=url, data=data, headers=headers, timeout=timeout)
            return FakeResponse(200, {'transcript': 'taxi into position'})

        monkeypatch.setattr(requests, 'post', fake_post)
        out = transcribe(clip, HttpAsrProvider('http://asr.local/v1', timeout_ms=2500))
        assert out.tokens == ['taxi', 'into', 'position']
        assert seen['headers']['Content-Type'] == 'audio/wav'
        assert seen['data'][:4] == b'RIFF'
        assert seen['timeout'] == 2.5

    def test_server_error_carries_status(self, monkeypatch, clip):
        monkeypatch.setattr(requests, 'post', lambda *a, **k: FakeResponse(500))
        with pytest.raises(AsrServiceError) as info:
            transcribe(clip, HttpAsrProvider('http://asr.local'))
        assert info.value.status == 500
        assert info.value.exit_code == 5

    def test_malformed_json(self, monkeypatch, clip):
        monkeypatch.setattr(requests, 'post', lambda *a, **k: FakeResponse(200, raw='<html>'))
        with pytest.raises(AsrServiceError):
            transcribe(clip, HttpAsrProvider('http://asr.local'))

    def test_missing_field(self, monkeypatch, clip):
        monkeypatch.setattr(requests, 'post', lambda *a, **k: FakeResponse(200, {'text': 'x'}))
        with pytest.raises(AsrServiceError):
            transcribe(clip, HttpAsrProvider('http://asr.local'))

    def test_timeout(self, monkeypatch, clip):
        def slow(*args, **kwargs):
            raise requests.Timeout()

        monkeypatch.setattr(requests, 'post', slow)
        with pytest.raises(AsrServiceError):
            transcribe(clip, HttpAsrProvider('http://asr.local', timeout_ms=10))

    def test_endpoint_required(self):
        with pytest.raises(ConfigError):
            HttpAsrProvider('')


class TestFactory:
    def test_known_providers(self, tmp_path):
        assert build_asr_provider('sidecar', str(tmp_path)).name == 'sidecar'
        assert build_asr_provider('fixture').name == 'fixture'
        assert build_asr_provider('http', endpoint='http://x').name == 'http'

    def test_unknown_provider(self):
        with pytest.raises(ConfigError):
            build_asr_provider('whisper')
