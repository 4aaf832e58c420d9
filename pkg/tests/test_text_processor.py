import math

import numpy as np
import pytest

from processors.text_processor import (
    TfIdfModel,
    Transcript,
    fit_tfidf,
    tokenize,
    transform_corpus,
    transform_tfidf,
)
from utils.errors import EmptyCorpus


def doc(text, clip_id='d'):
    return Transcript.from_text(clip_id, text)


class TestTokenize:
    def test_radio_phrase(self):
        assert tokenize("Turning crosswind for runway 12.") == ["turning", "crosswind", "for", "runway", "12"]

    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_splits(self):
        assert tokenize("TAKE-OFF!!") == ["take", "off"]


class TestFit:
    def test_lexicographic_vocabulary(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        assert model.vocabulary == {'a': 0, 'b': 1, 'c': 2}
        assert model.doc_count == 2

    def test_idf_values(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        assert model.idf[model.vocabulary['b']] == 0.0
        assert model.idf[model.vocabulary['a']] == pytest.approx(math.log(2), abs=1e-12)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            fit_tfidf([doc("")])
        with pytest.raises(EmptyCorpus):
            fit_tfidf([])

    def test_json_round_trip_keeps_weights(self):
        model = fit_tfidf([doc("runway one"), doc("runway two")])
        back = TfIdfModel.from_json(model.to_json())
        assert back.vocabulary == model.vocabulary
        np.testing.assert_array_equal(back.idf, model.idf)


class TestTransform:
    def test_empty_document(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        assert np.all(transform_tfidf(doc(""), model).values == 0)

    def test_repeated_term(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        vec = transform_tfidf(doc("a a"), model).values
        assert vec[0] == pytest.approx(2 * math.log(2), abs=1e-4)
        assert vec[0] == pytest.approx(1.3863, abs=1e-4)
        assert np.all(vec[1:] == 0)

    def test_out_of_vocabulary(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        assert np.all(transform_tfidf(doc("zulu yankee"), model).values == 0)

    def test_corpus_matrix(self):
        model = fit_tfidf([doc("a b"), doc("b c")])
        assert transform_corpus([doc("a"), doc("c"), doc("")], model).shape == (3, 3)
        assert transform_corpus([], model).shape == (0, 3)


def test_matches_brute_force_counts():
    rng = np.random.default_rng(12)
    words = [f"w{i}" for i in range(12)]
    for _ in range(20):
        docs = [
            doc(' '.join(rng.choice(words, size=int(rng.integers(1, 9)))), clip_id=str(i))
            for i in range(int(rng.integers(1, 9)))
        ]
        model = fit_tfidf(docs)
        matrix = transform_corpus(docs, model)
        for term, column in model.vocabulary.items():
            df = sum(term in d.tokens for d in docs)
            idf = math.log(len(docs) / df)
            assert model.idf[column] == idf
            for row, d in enumerate(docs):
                assert matrix[row, column] == d.tokens.count(term) * idf
