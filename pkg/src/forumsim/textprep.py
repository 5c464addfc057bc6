"""Text preprocessing and term-vector construction.

The preprocessing pipeline runs in a fixed order: (1) append the thread
title to the post body, (2) strip HTML tags and decode entities, (3)
lowercase, (4) tokenize on non-alphanumeric boundaries, (5) drop stopwords,
(6) stem. The dictionary and all document frequencies are computed over the
title-appended posts, so the similarity layer and the vocabulary agree on
what a "document" is.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from html.parser import HTMLParser
from importlib import resources
from typing import Iterable, Iterator, Mapping

import numpy as np

from .corpus import Corpus
from .exceptions import ConsistencyError, InputError
from .porter import stem

__all__ = [
    "PrepOptions",
    "load_stopwords",
    "default_stopwords",
    "strip_html",
    "tokenize",
    "preprocess",
    "Dictionary",
    "TermVector",
    "ThreadVector",
    "build_dictionary",
    "token_dump_lines",
]

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword file: one word per line, '#' comments and blank lines
    ignored, matching is done on lowercased tokens."""
    words: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The bundled standard English stopword list."""
    text = (
        resources.files("forumsim")
        .joinpath("data/stopwords_en.txt")
        .read_text(encoding="utf-8")
    )
    words = set()
    for line in text.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)


@dataclass(frozen=True)
class PrepOptions:
    """Preprocessing switches; defaults match the standard pipeline."""

    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    stem: bool = True
    strip_html: bool = True


class _TextExtractor(HTMLParser):
    # collects character data between tags; convert_charrefs (the default)
    # decodes entities for us
    def __init__(self) -> None:
        super().__init__()
        self.pieces: list[str] = []

    def handle_data(self, data: str) -> None:
        self.pieces.append(data)


def strip_html(text: str) -> str:
    """Drop tags, decode entities; malformed fragments pass through as text.

    Data pieces are joined with spaces so adjacent text separated only by
    tags never fuses into one token.
    """
    parser = _TextExtractor()
    parser.feed(text)
    parser.close()
    return " ".join(parser.pieces)


def tokenize(text: str) -> list[str]:
    """Split on any non-alphanumeric character; underscores separate too."""
    return _TOKEN_RE.findall(text)


def preprocess(body: str, title: str, options: PrepOptions | None = None) -> list[str]:
    """Run the full pipeline on one post; returns the token list in text order
    (body tokens first, then title tokens)."""
    if options is None:
        options = PrepOptions()
    text = body + " " + title
    if options.strip_html:
        text = strip_html(text)
    tokens = tokenize(text.lower())
    tokens = [t for t in tokens if t not in options.stopwords]
    if options.stem:
        tokens = [stem(t) for t in tokens]
    return tokens


class Dictionary:
    """Sorted vocabulary with per-term document frequencies.

    ``df[j]`` counts the documents (title-appended posts) containing term j;
    ``n_documents`` is the total post count, empty posts included.
    """

    def __init__(
        self, terms: Iterable[str], df: Iterable[int], n_documents: int
    ) -> None:
        self.terms: tuple[str, ...] = tuple(terms)
        self.df: np.ndarray = np.asarray(list(df), dtype=np.int64)
        self.n_documents: int = int(n_documents)
        if len(self.terms) != len(self.df):
            raise ConsistencyError("terms and df lengths differ")
        if any(self.terms[i] >= self.terms[i + 1] for i in range(len(self.terms) - 1)):
            raise ConsistencyError("dictionary terms must be sorted and unique")
        if len(self.df) and (
            self.df.min() < 1 or self.df.max() > max(self.n_documents, 1)
        ):
            raise ConsistencyError("df out of range [1, n_documents]")
        self._index = {term: i for i, term in enumerate(self.terms)}

    def index(self, term: str) -> int:
        try:
            return self._index[term]
        except KeyError:
            raise InputError(f"term {term!r} not in dictionary") from None

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def __repr__(self) -> str:
        return f"Dictionary(n_terms={len(self.terms)}, n_documents={self.n_documents})"


class _SparseCounts:
    """Shared shape of term and thread vectors: sorted term indices with
    strictly positive counts."""

    __slots__ = ("indices", "counts")

    def __init__(self, indices: np.ndarray, counts: np.ndarray) -> None:
        self.indices = indices
        self.counts = counts

    @classmethod
    def _from_counter(cls, counter: Counter, index: Mapping[str, int]):
        idx = np.fromiter(
            sorted(index[t] for t in counter), dtype=np.int64, count=len(counter)
        )
        lookup = {index[t]: c for t, c in counter.items()}
        cnt = np.fromiter((lookup[i] for i in idx), dtype=np.int64, count=len(idx))
        return idx, cnt

    def as_dict(self) -> dict[int, int]:
        return {int(i): int(c) for i, c in zip(self.indices, self.counts)}

    def count_of(self, term_index: int) -> int:
        pos = int(np.searchsorted(self.indices, term_index))
        if pos < len(self.indices) and self.indices[pos] == term_index:
            return int(self.counts[pos])
        return 0

    def __len__(self) -> int:
        return len(self.indices)


class TermVector(_SparseCounts):
    """Term counts of one title-appended post."""

    __slots__ = ("doc_id",)

    def __init__(self, doc_id: str, indices: np.ndarray, counts: np.ndarray) -> None:
        super().__init__(indices, counts)
        self.doc_id = doc_id

    @classmethod
    def from_counter(cls, doc_id: str, counter: Counter, index: Mapping[str, int]):
        idx, cnt = cls._from_counter(counter, index)
        return cls(doc_id, idx, cnt)

    def __repr__(self) -> str:
        return f"TermVector(doc_id={self.doc_id!r}, n_terms={len(self)})"


class ThreadVector(_SparseCounts):
    """Element-wise sum of the member posts' term vectors."""

    __slots__ = ("thread_id",)

    def __init__(
        self, thread_id: str, indices: np.ndarray, counts: np.ndarray
    ) -> None:
        super().__init__(indices, counts)
        self.thread_id = thread_id

    @classmethod
    def from_counter(cls, thread_id: str, counter: Counter, index: Mapping[str, int]):
        idx, cnt = cls._from_counter(counter, index)
        return cls(thread_id, idx, cnt)

    def __repr__(self) -> str:
        return f"ThreadVector(thread_id={self.thread_id!r}, n_terms={len(self)})"


def build_dictionary(
    corpus: Corpus, options: PrepOptions | None = None
) -> tuple[Dictionary, dict[str, TermVector], dict[str, ThreadVector]]:
    """Preprocess every post and build the vocabulary, per-post term vectors,
    and per-thread vectors.

    Posts that come out empty keep an empty TermVector and still count toward
    ``n_documents``. Output is independent of post input order: terms are
    sorted, posts are visited sorted by post_id.
    """
    if options is None:
        options = PrepOptions()
    post_tokens: dict[str, Counter] = {}
    vocabulary: set[str] = set()
    for post in corpus.posts():
        tokens = preprocess(post.body, corpus.title_of(post.thread_id), options)
        counter = Counter(tokens)
        post_tokens[post.post_id] = counter
        vocabulary.update(counter)

    terms = sorted(vocabulary)
    index = {term: i for i, term in enumerate(terms)}
    df = np.zeros(len(terms), dtype=np.int64)
    for counter in post_tokens.values():
        for term in counter:
            df[index[term]] += 1

    dictionary = Dictionary(terms, df, corpus.n_posts)
    term_vectors = {
        pid: TermVector.from_counter(pid, counter, index)
        for pid, counter in post_tokens.items()
    }
    thread_vectors: dict[str, ThreadVector] = {}
    for thread in corpus.threads():
        total: Counter = Counter()
        for pid in thread.post_ids:
            total.update(post_tokens[pid])
        thread_vectors[thread.thread_id] = ThreadVector.from_counter(
            thread.thread_id, total, index
        )
    return dictionary, term_vectors, thread_vectors


def token_dump_lines(
    corpus: Corpus, options: PrepOptions | None = None
) -> Iterator[str]:
    """Debug dump: one line per post, ``post_id<TAB>space-joined tokens``."""
    if options is None:
        options = PrepOptions()
    for post in corpus.posts():
        tokens = preprocess(post.body, corpus.title_of(post.thread_id), options)
        yield f"{post.post_id}\t{' '.join(tokens)}"
