"""Tokenization and TF-IDF vectorization of transcripts"""
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from utils.errors import DataError, EmptyCorpus

_TOKEN = re.compile(r'[a-z0-9]+')


def tokenize(text: str) -> List[str]:
    """
    Lowercase and split on anything that is not [a-z0-9]

    Digits are kept since runway numbers carry meaning.
    """
    return _TOKEN.findall((text or '').lower())


@dataclass(frozen=True)
class Transcript:
    """Words spoken in one clip"""

    clip_id: str
    text: str
    tokens: List[str] = field(default_factory=list)

    @classmethod
    def from_text(cls, clip_id: str, text: str) -> "Transcript":
        return cls(clip_id=clip_id, text=text, tokens=tokenize(text))


@dataclass
class FeatureVector:
    """Dense feature vector"""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise DataError("Feature vector contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass
class TfIdfModel:
    """Vocabulary (term -> column) with natural-log IDF weights"""

    vocabulary: Dict[str, int]
    idf: np.ndarray
    doc_count: int
    log_base: str = 'e'

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    @property
    def terms(self) -> List[str]:
        return sorted(self.vocabulary, key=self.vocabulary.get)

    def to_dict(self) -> dict:
        return {
            'vocabulary': self.vocabulary,
            'idf': [float(v) for v in self.idf],
            'doc_count': self.doc_count,
            'log_base': self.log_base,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TfIdfModel":
        return cls(
            vocabulary={str(k): int(v) for k, v in payload['vocabulary'].items()},
            idf=np.asarray(payload['idf'], dtype=np.float64),
            doc_count=int(payload['doc_count']),
            log_base=payload.get('log_base', 'e'),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TfIdfModel":
        return cls.from_dict(json.loads(text))


def fit_tfidf(corpus: Sequence[Transcript]) -> TfIdfModel:
    """
    Fit vocabulary and IDF = ln(N / df) on a transcript corpus

    Args:
        corpus: Transcripts, at least one with tokens

    Returns:
        TfIdfModel with lexicographically ordered vocabulary
    """
    if not corpus or not any(doc.tokens for doc in corpus):
        raise EmptyCorpus("TF-IDF needs at least one non-empty document")
    doc_freq = Counter()
    for doc in corpus:
        doc_freq.update(set(doc.tokens))
    terms = sorted(doc_freq)
    n_docs = len(corpus)
    idf = np.array([math.log(n_docs / doc_freq[t]) for t in terms])
    return TfIdfModel(
        vocabulary={t: i for i, t in enumerate(terms)},
        idf=idf,
        doc_count=n_docs,
    )


def transform_tfidf(doc: Transcript, model: TfIdfModel) -> FeatureVector:
    """Raw term count times IDF; out-of-vocabulary tokens are ignored"""
    values = np.zeros(model.dim)
    for term, count in Counter(doc.tokens).items():
        column = model.vocabulary.get(term)
        if column is not None:
            values[column] = count * model.idf[column]
    return FeatureVector(values=values)


def transform_corpus(docs: Sequence[Transcript], model: TfIdfModel) -> np.ndarray:
    """Stack transform_tfidf rows into an (n_docs, vocabulary) matrix"""
    if not docs:
        return np.zeros((0, model.dim))
    return np.vstack([transform_tfidf(doc, model).values for doc in docs])
