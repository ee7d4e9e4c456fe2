"""Tokenization, term statistics and the two similarity measures used by selection.

All arithmetic is plain Python floats accumulated left to right.  Threshold
comparisons downstream rely on these numbers being reproducible across
machines, so nothing here may delegate to a vectorized math backend.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import DimensionMismatch, EmptyCorpus, ZeroVector

_WORD_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens in order of appearance (``\\w+`` runs)."""
    return _WORD_RE.findall(text.lower())


def jaccard(tokens_a, tokens_b) -> float:
    """Set-based Jaccard similarity; two empty token sets count as identical."""
    set_a = set(tokens_a)
    set_b = set(tokens_b)
    if not set_a and not set_b:
        return 1.0
    return len(set_a & set_b) / len(set_a | set_b)


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length dense vector."""

    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)


def cosine(u, v) -> float:
    """Cosine of the angle between two equal-length, non-zero vectors."""
    uv = u.values if isinstance(u, EmbeddingVector) else tuple(u)
    vv = v.values if isinstance(v, EmbeddingVector) else tuple(v)
    if len(uv) != len(vv):
        raise DimensionMismatch(f"vector lengths differ: {len(uv)} vs {len(vv)}")
    dot = 0.0
    norm_u = 0.0
    norm_v = 0.0
    for a, b in zip(uv, vv):
        dot += a * b
        norm_u += a * a
        norm_v += b * b
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine similarity undefined for an all-zero vector")
    return dot / (math.sqrt(norm_u) * math.sqrt(norm_v))


@dataclass(frozen=True)
class TfidfState:
    """Fitted TF-IDF embedder: sorted vocabulary with idf weights."""

    vocabulary: tuple[str, ...]
    idf: tuple[float, ...]

    def term_index(self) -> dict[str, int]:
        return {term: i for i, term in enumerate(self.vocabulary)}


def fit_tfidf(corpus: list[list[str]]) -> TfidfState:
    """Fit TF-IDF weights over tokenized documents.

    idf(t) = ln((1 + D) / (1 + df(t))) + 1 over the sorted batch vocabulary.
    """
    if not corpus:
        raise EmptyCorpus("cannot fit TF-IDF on an empty corpus")
    vocab = sorted({tok for doc in corpus for tok in doc})
    index = {term: i for i, term in enumerate(vocab)}
    doc_freq = [0] * len(vocab)
    for doc in corpus:
        for term in set(doc):
            doc_freq[index[term]] += 1
    n_docs = len(corpus)
    idf = tuple(math.log((1 + n_docs) / (1 + df)) + 1.0 for df in doc_freq)
    return TfidfState(vocabulary=tuple(vocab), idf=idf)


def embed(state: TfidfState, text: str) -> EmbeddingVector:
    """Embed `text` with a fitted state; out-of-vocabulary terms are ignored."""
    index = state.term_index()
    row = [0.0] * len(state.vocabulary)
    for tok in tokenize(text):
        i = index.get(tok)
        if i is not None:
            row[i] += state.idf[i]
    return EmbeddingVector(values=tuple(row))


@dataclass(frozen=True)
class TermFrequencyTable:
    """Raw term counts plus the corpus total, with frequency lookups."""

    counts: dict[str, int]
    total: int

    def frequency(self, term: str) -> float:
        if self.total == 0:
            return 0.0
        return self.counts.get(term, 0) / self.total

    def frequency_exact(self, term: str) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.counts.get(term, 0), self.total)

    def top(self, k: int) -> list[tuple[str, int]]:
        """Top-k (term, count) pairs, count descending then term ascending."""
        ranked = sorted(self.counts.items(), key=lambda pair: (-pair[1], pair[0]))
        return ranked[:k]


def term_frequencies(texts: list[str], stopwords: frozenset[str]) -> TermFrequencyTable:
    """Corpus-wide term counts over all texts, stopwords excluded."""
    counts: dict[str, int] = {}
    total = 0
    for text in texts:
        for tok in tokenize(text):
            if tok in stopwords:
                continue
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    return TermFrequencyTable(counts=counts, total=total)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword set from a newline-delimited file; bundled list when no path given."""
    if path is None:
        text = resources.files("trailerforge").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = {line.strip().lower() for line in text.splitlines()}
    return frozenset(w for w in words if w and not w.startswith("#"))


def content_tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    """Tokens of `text` with stopwords removed, original order preserved."""
    return [tok for tok in tokenize(text) if tok not in stopwords]
