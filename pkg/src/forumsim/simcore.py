"""Post-to-post similarity: tf-idf, the thread-modified variant, cosine,
the author constant, and the dissimilarity matrix.

Weights use the thread-modified tf-idf: the document frequency of a term is
divided by the term's frequency in the enclosing thread, which boosts terms
that are salient for the thread. The same weights appear in both the dot
product and the norms of the cosine. The author constant ``lam`` is added to
the similarity of same-author pairs before converting to distance with
``max(0, 1 - sim)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import matio
from ._kernels import pairwise_cosine
from .corpus import Corpus, nearest_rank_quantile
from .exceptions import ConsistencyError, InputError
from .textprep import Dictionary, TermVector, ThreadVector

__all__ = [
    "tfidf",
    "thread_tfidf",
    "WeightVector",
    "weight_vector",
    "weight_vectors",
    "cosine",
    "post_similarity",
    "post_distance",
    "cosine_matrix",
    "DissimilarityMatrix",
    "build_dissimilarity_matrix",
    "select_lambda",
    "validate_distance_matrix",
]


def tfidf(tf: int, df: int, n: int) -> float:
    """Plain tf-idf: ``tf * log2(n / df)``; 0 when tf is 0."""
    if tf < 0:
        raise InputError(f"tf must be >= 0, got {tf}")
    if df < 1 or df > n:
        raise InputError(f"df must satisfy 1 <= df <= n, got df={df}, n={n}")
    if tf == 0:
        return 0.0
    return tf * math.log2(n / df)


def thread_tfidf(tf: int, df: int, thread_tf: int, n: int) -> float:
    """Thread-modified tf-idf: ``tf * log2(n * thread_tf / df)``.

    ``thread_tf`` is the term's frequency in the whole thread, so the
    effective document frequency ``df / thread_tf`` shrinks for terms the
    thread repeats; it may drop below 1, which is allowed. Strictly
    increasing in ``thread_tf`` for fixed tf, df, n.
    """
    if tf < 0:
        raise InputError(f"tf must be >= 0, got {tf}")
    if df < 1 or df > n:
        raise InputError(f"df must satisfy 1 <= df <= n, got df={df}, n={n}")
    if tf == 0:
        return 0.0
    if thread_tf < tf:
        raise ConsistencyError(
            f"thread_tf ({thread_tf}) < tf ({tf}): a post's terms must be "
            "counted in its thread vector"
        )
    return tf * math.log2(n * thread_tf / df)


class WeightVector:
    """Sparse tf-idf weights of one post, with the Euclidean norm cached."""

    __slots__ = ("doc_id", "indices", "weights", "norm")

    def __init__(self, doc_id: str, indices: np.ndarray, weights: np.ndarray) -> None:
        self.doc_id = doc_id
        self.indices = indices
        self.weights = weights
        self.norm = float(np.sqrt(np.dot(weights, weights)))

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(w) for i, w in zip(self.indices, self.weights)}

    def __len__(self) -> int:
        return len(self.indices)

    def __repr__(self) -> str:
        return f"WeightVector(doc_id={self.doc_id!r}, n_terms={len(self)})"


def weight_vector(
    post: TermVector, thread: ThreadVector, dictionary: Dictionary
) -> WeightVector:
    """Thread-modified tf-idf weights for one title-appended post."""
    if len(post) == 0:
        return WeightVector(
            post.doc_id, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        )
    if int(post.indices[-1]) >= len(dictionary):
        raise ConsistencyError(
            f"post {post.doc_id!r} has a term index outside the dictionary"
        )
    positions = np.searchsorted(thread.indices, post.indices)
    if (
        positions.max(initial=0) >= len(thread.indices)
        or not (thread.indices[positions] == post.indices).all()
    ):
        raise ConsistencyError(
            f"thread vector {thread.thread_id!r} is missing terms present in "
            f"post {post.doc_id!r}"
        )
    thread_counts = thread.counts[positions]
    if (thread_counts < post.counts).any():
        raise ConsistencyError(
            f"thread vector {thread.thread_id!r} undercounts terms of post "
            f"{post.doc_id!r}"
        )
    df = dictionary.df[post.indices]
    n = dictionary.n_documents
    weights = post.counts * np.log2(n * thread_counts / df)
    return WeightVector(post.doc_id, post.indices.copy(), weights)


def weight_vectors(
    corpus: Corpus,
    dictionary: Dictionary,
    term_vectors: Mapping[str, TermVector],
    thread_vectors: Mapping[str, ThreadVector],
) -> dict[str, WeightVector]:
    """Weight vectors for every post, keyed by post_id."""
    out: dict[str, WeightVector] = {}
    for post in corpus.posts():
        out[post.post_id] = weight_vector(
            term_vectors[post.post_id],
            thread_vectors[post.thread_id],
            dictionary,
        )
    return out


def cosine(a: WeightVector, b: WeightVector) -> float:
    """Normalized dot product; 0 if either vector has zero norm.

    Shared terms are accumulated in ascending index order, so the result is
    reproducible across runs.
    """
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    _, ia, ib = np.intersect1d(
        a.indices, b.indices, assume_unique=True, return_indices=True
    )
    if len(ia) == 0:
        return 0.0
    dot = float(np.dot(a.weights[ia], b.weights[ib]))
    return dot / (a.norm * b.norm)


def post_similarity(
    a: WeightVector, b: WeightVector, lam: float, same_author: bool
) -> float:
    """Cosine plus ``lam`` when both posts share an author."""
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    sim = cosine(a, b)
    if same_author:
        sim += lam
    return sim


def post_distance(
    a: WeightVector, b: WeightVector, lam: float, same_author: bool
) -> float:
    """``max(0, 1 - similarity)``; always in [0, 1]."""
    return max(0.0, 1.0 - post_similarity(a, b, lam, same_author))


def _csr_from_weight_vectors(
    vectors: Sequence[WeightVector],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = len(vectors)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + len(v)
    nnz = int(indptr[-1])
    indices = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz, dtype=np.float64)
    for i, v in enumerate(vectors):
        indices[indptr[i] : indptr[i + 1]] = v.indices
        data[indptr[i] : indptr[i + 1]] = v.weights
    norms = np.array([v.norm for v in vectors], dtype=np.float64)
    return indptr, indices, data, norms


def cosine_matrix(
    vectors: Sequence[WeightVector], n_terms: int | None = None
) -> np.ndarray:
    """All-pairs cosine matrix (no author constant).

    Diagonal entries are 1 for nonzero vectors and 0 for zero-norm vectors.
    Exactly symmetric: each pair is computed once and mirrored.
    """
    n = len(vectors)
    if n == 0:
        return np.zeros((0, 0), dtype=np.float64)
    indptr, indices, data, norms = _csr_from_weight_vectors(vectors)
    if n_terms is None:
        n_terms = int(indices.max()) + 1 if len(indices) else 1
    return pairwise_cosine(indptr, indices, data, norms, n_terms)


@dataclass
class DissimilarityMatrix:
    """Symmetric post-by-post distance matrix with authorship metadata.

    ``author_of[i]`` indexes ``user_ids`` for post ``doc_ids[i]``; ``lam`` is
    the author constant folded into ``values``. Matrices read back from CSV
    carry ``author_of=None`` and ``lam=None``.
    """

    doc_ids: tuple[str, ...]
    values: np.ndarray
    user_ids: tuple[str, ...] | None = None
    author_of: tuple[int, ...] | None = None
    lam: float | None = None

    def to_csv(self, dest) -> None:
        matio.write_labeled_matrix(self.doc_ids, self.values, dest)

    @classmethod
    def from_csv(cls, source) -> "DissimilarityMatrix":
        ids, values = matio.read_labeled_matrix(source)
        validate_distance_matrix(values, unit_range=True)
        return cls(doc_ids=ids, values=values)

    def __repr__(self) -> str:
        return (
            f"DissimilarityMatrix(n={len(self.doc_ids)}, lam={self.lam!r})"
        )


def validate_distance_matrix(
    values: np.ndarray, unit_range: bool = False
) -> None:
    """Reject matrices that are not square, symmetric, non-negative, finite,
    and zero on the diagonal; with ``unit_range`` entries must lie in [0, 1]."""
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {values.shape}")
    if values.size == 0:
        return
    if not np.isfinite(values).all():
        raise InputError("distance matrix contains non-finite entries")
    if not (values == values.T).all():
        raise InputError("distance matrix is not symmetric")
    if (np.diagonal(values) != 0).any():
        raise InputError("distance matrix diagonal must be zero")
    if (values < 0).any():
        raise InputError("distance matrix contains negative entries")
    if unit_range and (values > 1).any():
        raise InputError("distance matrix entries must lie in [0, 1]")


def build_dissimilarity_matrix(
    corpus: Corpus, vectors: Mapping[str, WeightVector], lam: float
) -> DissimilarityMatrix:
    """All-pairs post distances ``max(0, 1 - cosine)``, with ``lam``
    subtracted from same-author off-diagonal entries (clamped again at 0).

    Applying ``lam`` on top of the lam-free distances keeps different-author
    entries bit-identical across lambda values. The diagonal is forced to 0,
    including for posts that are empty after preprocessing.
    """
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    doc_ids = corpus.post_ids
    n = len(doc_ids)
    user_ids = corpus.user_ids
    user_index = {uid: i for i, uid in enumerate(user_ids)}
    author_of = tuple(user_index[corpus.post(pid).user_id] for pid in doc_ids)
    if n == 0:
        return DissimilarityMatrix(
            doc_ids, np.zeros((0, 0), dtype=np.float64), user_ids, author_of, lam
        )
    ordered = [vectors[pid] for pid in doc_ids]
    cos = cosine_matrix(ordered)
    dist = np.maximum(0.0, 1.0 - cos)
    if lam > 0:
        authors = np.asarray(author_of, dtype=np.int64)
        same = authors[:, None] == authors[None, :]
        dist[same] = np.maximum(0.0, dist[same] - lam)
    np.fill_diagonal(dist, 0.0)
    return DissimilarityMatrix(doc_ids, dist, user_ids, author_of, lam)


def select_lambda(cosines: np.ndarray, quantile: float = 0.75) -> float:
    """Nearest-rank quantile of the strictly positive off-diagonal cosines.

    ``cosines`` must be the lam-free cosine matrix; only the upper triangle
    is scanned (the matrix is symmetric).
    """
    if not 0.0 < quantile < 1.0:
        raise InputError(f"quantile must be in (0, 1), got {quantile}")
    cosines = np.asarray(cosines)
    if cosines.ndim != 2 or cosines.shape[0] != cosines.shape[1]:
        raise InputError("cosine matrix must be square")
    n = cosines.shape[0]
    upper = cosines[np.triu_indices(n, k=1)] if n > 1 else np.empty(0)
    positive = np.sort(upper[upper > 0])
    if len(positive) == 0:
        raise InputError(
            "no strictly positive off-diagonal similarities; "
            "choose lambda manually"
        )
    return float(nearest_rank_quantile(positive, quantile))
