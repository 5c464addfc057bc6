"""Shared fixtures; compiles the numba kernels once before any timed test."""

from __future__ import annotations

import numpy as np
import pytest

from forumsim import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation up front so timing assertions measure the
    algorithms, not the compiler."""
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([0, 0], dtype=np.int64)
    data = np.array([1.0, 1.0])
    norms = np.array([1.0, 1.0])
    _kernels.pairwise_cosine(indptr, indices, data, norms, 1)
    _kernels.pairwise_euclidean(np.zeros((2, 2)))
    yield


@pytest.fixture
def tiny_corpus():
    from corpora import tiny_corpus as build

    return build()
