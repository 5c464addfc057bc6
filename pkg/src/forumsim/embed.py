"""Principal-coordinate embeddings of the dissimilarity matrix, per-user
centroids, and user-to-user distances.

Two embedding modes are provided. ``paper_literal`` takes the SVD of the
dissimilarity matrix M itself and uses the first k columns of V*Sigma as
coordinates; because M is symmetric, M @ U equals V*Sigma exactly, so the
stored left singular vectors give a self-consistent out-of-sample map.
``classical_pcoa`` is the textbook method: double-center -1/2 * J (M o M) J
and eigendecompose, keeping only positive eigenvalues. On a genuine
Euclidean distance matrix the classical mode reproduces all pairwise
distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import pairwise_euclidean
from .corpus import Corpus
from .exceptions import InputError
from .simcore import DissimilarityMatrix, validate_distance_matrix

__all__ = [
    "Embedding",
    "UserGeometry",
    "principal_coordinates",
    "user_centroids",
    "user_distance_matrix",
    "average_pairwise_user_distance",
    "project_new_posts",
]

MODES = ("paper_literal", "classical_pcoa")


@dataclass
class Embedding:
    """Post coordinates plus the spectrum they came from.

    ``singular_values`` holds the full non-increasing spectrum (all singular
    values for paper_literal, the positive eigenvalues for classical_pcoa);
    ``coords`` keeps only the first k columns. ``left_vectors`` (paper_literal
    only) are the matching left singular vectors, used for out-of-sample
    projection and reconstruction. ``dropped_mass`` reports the share of
    absolute eigenvalue mass discarded as negative in classical mode.
    """

    doc_ids: tuple[str, ...]
    coords: np.ndarray
    singular_values: np.ndarray
    mode: str
    left_vectors: np.ndarray | None = None
    dropped_mass: float = 0.0

    @property
    def k(self) -> int:
        return self.coords.shape[1]


@dataclass
class UserGeometry:
    """Per-user centroids in embedding space and their Euclidean distances."""

    user_ids: tuple[str, ...]
    centroids: np.ndarray
    distances: np.ndarray
    excluded_user_ids: tuple[str, ...] = field(default_factory=tuple)


def _fix_signs(vectors: np.ndarray, companions: np.ndarray | None = None) -> None:
    """Flip each column of ``vectors`` (and the matching column of
    ``companions``) so its largest-magnitude entry is positive; first index
    wins ties. In-place; makes decompositions reproducible across runs."""
    if vectors.size == 0:
        return
    anchor = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[anchor, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    if companions is not None:
        companions *= signs


def _auto_k(spectrum: np.ndarray, threshold: float = 0.9) -> int:
    """Smallest k whose leading singular values hold >= ``threshold`` of the
    total; 1 for an all-zero spectrum."""
    total = float(spectrum.sum())
    if total <= 0.0 or len(spectrum) == 0:
        return 1 if len(spectrum) else 0
    cumulative = np.cumsum(spectrum)
    return int(np.searchsorted(cumulative, threshold * total)) + 1


def principal_coordinates(
    m: DissimilarityMatrix, k: int | str = "auto", mode: str = "paper_literal"
) -> Embedding:
    """Embed the posts of a dissimilarity matrix into k dimensions.

    ``k`` may be an integer (capped at the positive spectrum in classical
    mode) or "auto", which picks the smallest k capturing at least 90% of the
    spectrum mass. The sign of every coordinate axis is fixed so repeated
    runs give identical output.
    """
    if mode not in MODES:
        raise InputError(f"unknown embedding mode {mode!r}; expected {MODES}")
    values = np.asarray(m.values, dtype=np.float64)
    validate_distance_matrix(values)
    n = values.shape[0]
    if n == 0:
        return Embedding(
            m.doc_ids,
            np.zeros((0, 0)),
            np.zeros(0),
            mode,
            left_vectors=np.zeros((0, 0)) if mode == "paper_literal" else None,
        )
    if isinstance(k, str):
        if k != "auto":
            raise InputError(f"k must be an integer or 'auto', got {k!r}")
        want_k = None
    else:
        want_k = int(k)
        if want_k < 1 or want_k > n:
            raise InputError(f"k must satisfy 1 <= k <= {n}, got {want_k}")

    if mode == "paper_literal":
        u, s, vt = np.linalg.svd(values)
        v = vt.T
        _fix_signs(v, u)
        kk = _auto_k(s) if want_k is None else want_k
        coords = v[:, :kk] * s[:kk]
        return Embedding(m.doc_ids, coords, s, mode, left_vectors=u[:, :kk])

    # classical_pcoa: Gower double-centering of squared dissimilarities
    sq = values * values
    row_mean = sq.mean(axis=1, keepdims=True)
    col_mean = sq.mean(axis=0, keepdims=True)
    grand = sq.mean()
    b = -0.5 * (sq - row_mean - col_mean + grand)
    b = 0.5 * (b + b.T)
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    positive = eigvals > 0.0
    total_abs = float(np.abs(eigvals).sum())
    dropped = float(np.abs(eigvals[~positive]).sum())
    dropped_mass = dropped / total_abs if total_abs > 0 else 0.0
    pos_vals = eigvals[positive]
    pos_vecs = eigvecs[:, positive]
    _fix_signs(pos_vecs)
    n_pos = len(pos_vals)
    if n_pos == 0:
        kk = 1 if want_k is None else min(want_k, 1)
        return Embedding(
            m.doc_ids,
            np.zeros((n, kk)),
            np.zeros(0),
            mode,
            dropped_mass=dropped_mass,
        )
    kk = _auto_k(pos_vals) if want_k is None else min(want_k, n_pos)
    coords = pos_vecs[:, :kk] * np.sqrt(pos_vals[:kk])
    return Embedding(m.doc_ids, coords, pos_vals, mode, dropped_mass=dropped_mass)


def user_centroids(e: Embedding, corpus: Corpus) -> UserGeometry:
    """Arithmetic-mean centroid per user, plus the user distance matrix.

    Users with no posts in the embedding are excluded and listed in
    ``excluded_user_ids``.
    """
    doc_index = {pid: i for i, pid in enumerate(e.doc_ids)}
    rows_per_user: dict[str, list[int]] = {}
    for pid in e.doc_ids:
        post = corpus.post(pid)
        rows_per_user.setdefault(post.user_id, []).append(doc_index[pid])
    included = tuple(sorted(rows_per_user))
    excluded = tuple(uid for uid in corpus.user_ids if uid not in rows_per_user)
    k = e.coords.shape[1] if e.coords.ndim == 2 else 0
    centroids = np.zeros((len(included), k), dtype=np.float64)
    for i, uid in enumerate(included):
        rows = rows_per_user[uid]
        centroids[i] = e.coords[rows].mean(axis=0)
    distances = pairwise_euclidean(centroids)
    return UserGeometry(included, centroids, distances, excluded)


def user_distance_matrix(g: UserGeometry) -> np.ndarray:
    """Pairwise Euclidean distances between centroids (symmetric, zero
    diagonal)."""
    return pairwise_euclidean(np.asarray(g.centroids, dtype=np.float64))


def average_pairwise_user_distance(
    m: DissimilarityMatrix, corpus: Corpus
) -> tuple[tuple[str, ...], np.ndarray]:
    """Mean post distance over all cross-author post pairs, per user pair.

    Requires a matrix built with lam = 0: the author term never participates
    in this alternative user distance. The diagonal is 0 by definition.
    """
    if m.lam is None:
        raise InputError(
            "matrix has unknown lambda; rebuild it with lambda = 0 for "
            "average pairwise user distances"
        )
    if m.lam != 0:
        raise InputError(
            f"average pairwise user distance requires a lambda-free matrix, "
            f"got lambda = {m.lam}"
        )
    doc_index = {pid: i for i, pid in enumerate(m.doc_ids)}
    rows_per_user: dict[str, list[int]] = {}
    for pid in m.doc_ids:
        post = corpus.post(pid)
        rows_per_user.setdefault(post.user_id, []).append(doc_index[pid])
    user_ids = tuple(sorted(rows_per_user))
    n = len(user_ids)
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        rows_i = rows_per_user[user_ids[i]]
        for j in range(i + 1, n):
            rows_j = rows_per_user[user_ids[j]]
            block = m.values[np.ix_(rows_i, rows_j)]
            out[i, j] = out[j, i] = float(block.mean())
    return user_ids, out


def project_new_posts(e: Embedding, new_rows: np.ndarray) -> np.ndarray:
    """Map dissimilarity rows of unseen posts into the embedding.

    ``new_rows`` has one row per new post with columns aligned to
    ``e.doc_ids``. Original rows of the embedded matrix map to their own
    stored coordinates.
    """
    if e.mode != "paper_literal":
        raise InputError(
            f"out-of-sample projection requires mode 'paper_literal', "
            f"got {e.mode!r}"
        )
    if e.left_vectors is None:
        raise InputError("embedding is missing its projection factor")
    new_rows = np.atleast_2d(np.asarray(new_rows, dtype=np.float64))
    n = len(e.doc_ids)
    if new_rows.shape[1] != n:
        raise InputError(
            f"projection rows have {new_rows.shape[1]} columns, expected {n}"
        )
    return new_rows @ e.left_vectors
