"""Hot numeric kernels: numba-compiled by default, pure numpy as a fallback.

The numpy path is selected by setting the environment variable
``FORUMSIM_NO_NUMBA=1`` before import (or automatically when numba is not
importable).  Both paths produce exactly symmetric matrices; entries agree
across paths to within float64 rounding of the accumulation order.

Sparse inputs use a CSR layout (indptr/indices/data) with column indices
sorted within each row, so the merge-based dot product accumulates in a
fixed term order regardless of thread scheduling.
"""

from __future__ import annotations

import os

import numpy as np


def _flag_disabled() -> bool:
    return os.environ.get("FORUMSIM_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


NUMBA_ENABLED = False
if not _flag_disabled():
    try:
        from numba import njit, prange

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def pairwise_cosine_numpy(indptr: np.ndarray, indices: np.ndarray, data: np.ndarray,
                          norms: np.ndarray, n_terms: int) -> np.ndarray:
    """All-pairs cosine of CSR rows via a dense matrix product.

    Materializes the dense row matrix; fine at the scale this package targets
    (filtered corpora), the numba path avoids it.
    """
    n = norms.shape[0]
    dense = np.zeros((n, n_terms), dtype=np.float64)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        if norms[i] > 0.0:
            dense[i, indices[lo:hi]] = data[lo:hi] / norms[i]
    out = dense @ dense.T
    out = np.triu(out, k=1)
    out = out + out.T
    np.fill_diagonal(out, np.where(norms > 0.0, 1.0, 0.0))
    return out


def pairwise_euclidean_numpy(points: np.ndarray) -> np.ndarray:
    """All-pairs Euclidean distances between rows of a dense matrix."""
    diff = points[:, None, :] - points[None, :, :]
    out = np.sqrt((diff * diff).sum(axis=-1))
    out = np.triu(out, k=1)
    out = out + out.T
    return out


if NUMBA_ENABLED:

    @njit(parallel=True, cache=True)
    def _cosine_upper(indptr, indices, data, norms, out):  # pragma: no cover - compiled
        n = norms.shape[0]
        for i in prange(n):
            ilo = indptr[i]
            ihi = indptr[i + 1]
            ni = norms[i]
            for j in range(i + 1, n):
                nj = norms[j]
                if ni == 0.0 or nj == 0.0:
                    out[i, j] = 0.0
                    continue
                dot = 0.0
                a = ilo
                b = indptr[j]
                bhi = indptr[j + 1]
                # merge over sorted term indices: fixed accumulation order
                while a < ihi and b < bhi:
                    ta = indices[a]
                    tb = indices[b]
                    if ta == tb:
                        dot += data[a] * data[b]
                        a += 1
                        b += 1
                    elif ta < tb:
                        a += 1
                    else:
                        b += 1
                out[i, j] = dot / (ni * nj)

    @njit(parallel=True, cache=True)
    def _euclidean_upper(points, out):  # pragma: no cover - compiled
        n = points.shape[0]
        d = points.shape[1]
        for i in prange(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    acc += diff * diff
                out[i, j] = np.sqrt(acc)

    def pairwise_cosine_numba(indptr, indices, data, norms, n_terms):
        n = norms.shape[0]
        out = np.zeros((n, n), dtype=np.float64)
        _cosine_upper(indptr, indices, data, norms, out)
        out = out + out.T
        np.fill_diagonal(out, np.where(norms > 0.0, 1.0, 0.0))
        return out

    def pairwise_euclidean_numba(points):
        points = np.ascontiguousarray(points, dtype=np.float64)
        n = points.shape[0]
        out = np.zeros((n, n), dtype=np.float64)
        _euclidean_upper(points, out)
        return out + out.T

    pairwise_cosine = pairwise_cosine_numba
    pairwise_euclidean = pairwise_euclidean_numba
else:
    pairwise_cosine_numba = None
    pairwise_euclidean_numba = None
    pairwise_cosine = pairwise_cosine_numpy
    pairwise_euclidean = pairwise_euclidean_numpy
