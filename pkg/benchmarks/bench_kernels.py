"""Benchmark the numba kernels against the pure-numpy fallback.

Generates a random sparse term matrix shaped like a real corpus and times
the all-pairs cosine kernel (the hot path of the dissimilarity matrix) and
the all-pairs Euclidean kernel on both implementations.

Run:  python3 benchmarks/bench_kernels.py --n-docs 5000 --repeats 5
"""

import argparse
import time

import numpy as np

from forumsim import _kernels


def random_csr(rng, n_docs, n_terms, density):
    lengths = rng.binomial(n_terms, density, size=n_docs)
    indptr = np.zeros(n_docs + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = rng.random(indptr[-1]) + 0.1
    for i in range(n_docs):
        k = lengths[i]
        indices[indptr[i] : indptr[i + 1]] = np.sort(
            rng.choice(n_terms, size=k, replace=False)
        )
    norms = np.zeros(n_docs, dtype=np.float64)
    for i in range(n_docs):
        row = data[indptr[i] : indptr[i + 1]]
        norms[i] = np.sqrt(np.dot(row, row))
    return indptr, indices, data, norms


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    # Defaults mimic a forum corpus: large vocabulary, ~20 terms per post.
    parser.add_argument("--n-docs", type=int, default=3000)
    parser.add_argument("--n-terms", type=int, default=40000)
    parser.add_argument("--density", type=float, default=0.0005)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    indptr, indices, data, norms = random_csr(
        rng, args.n_docs, args.n_terms, args.density
    )
    nnz = len(data)
    print(
        f"cosine input: {args.n_docs} docs x {args.n_terms} terms, "
        f"{nnz} nonzeros ({nnz / max(args.n_docs, 1):.1f} terms/doc)"
    )

    rows = []
    numpy_cos = timeit(
        lambda: _kernels.pairwise_cosine_numpy(
            indptr, indices, data, norms, args.n_terms
        ),
        args.repeats,
    )
    rows.append(("cosine", "numpy", numpy_cos))
    if _kernels.NUMBA_ENABLED:
        # First call compiles; time only the steady state.
        _kernels.pairwise_cosine_numba(indptr, indices, data, norms, args.n_terms)
        numba_cos = timeit(
            lambda: _kernels.pairwise_cosine_numba(
                indptr, indices, data, norms, args.n_terms
            ),
            args.repeats,
        )
        rows.append(("cosine", "numba", numba_cos))

    points = rng.standard_normal((args.n_docs, 8))
    numpy_euc = timeit(
        lambda: _kernels.pairwise_euclidean_numpy(points), args.repeats
    )
    rows.append(("euclidean", "numpy", numpy_euc))
    if _kernels.NUMBA_ENABLED:
        _kernels.pairwise_euclidean_numba(points)
        numba_euc = timeit(
            lambda: _kernels.pairwise_euclidean_numba(points), args.repeats
        )
        rows.append(("euclidean", "numba", numba_euc))

    print()
    print(f"{'kernel':<10}{'path':<7}{'best of ' + str(args.repeats):>14}")
    baselines = {}
    for kernel, path, seconds in rows:
        line = f"{kernel:<10}{path:<7}{seconds:>13.4f}s"
        if path == "numpy":
            baselines[kernel] = seconds
        else:
            line += f"  ({baselines[kernel] / seconds:.1f}x)"
        print(line)
    if not _kernels.NUMBA_ENABLED:
        print("\nnumba path disabled (FORUMSIM_NO_NUMBA or import failure).")


if __name__ == "__main__":
    main()
