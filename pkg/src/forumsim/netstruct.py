"""Network-structure artifacts over a user distance matrix: agglomerative
clustering (complete and single linkage), dendrogram cuts, the minimum
spanning tree, and the text-only baseline distance.

Cluster indices follow the usual convention: leaves are 0..n-1 in the order
of the input ids, and the cluster created by merge step s gets index n+s.
Ties in both the linkage and Kruskal are broken lexicographically (by index
pair and by id pair respectively) so results are reproducible.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import pairwise_cosine
from .corpus import Corpus
from .exceptions import InputError
from .simcore import validate_distance_matrix
from .textprep import PrepOptions, preprocess

__all__ = [
    "Dendrogram",
    "SpanningTree",
    "agglomerate",
    "cut",
    "minimum_spanning_tree",
    "baseline_user_similarity",
    "mst_to_dot",
    "mst_edges_csv",
]

LINKAGES = ("complete", "single")

_BARE_NEWICK = re.compile(r"^[A-Za-z0-9_.|-]+$")


@dataclass(frozen=True)
class Dendrogram:
    """Merge list of an agglomerative clustering.

    ``merges[s] = (a, b, height)`` joins clusters a and b (a < b) into the
    new cluster ``n + s``; heights are non-decreasing.
    """

    leaf_ids: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]
    linkage: str

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    def heights(self) -> tuple[float, ...]:
        return tuple(h for _, _, h in self.merges)

    def to_json(self) -> str:
        payload = {
            "leaves": list(self.leaf_ids),
            "linkage": self.linkage,
            "merges": [[a, b, h] for a, b, h in self.merges],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_newick(self) -> str:
        """Newick text with branch lengths equal to height deltas between a
        node and its parent merge."""
        n = self.n_leaves
        if n == 0:
            return ";\n"
        height_of = [0.0] * (n + len(self.merges))
        for s, (_, _, h) in enumerate(self.merges):
            height_of[n + s] = h

        def render(node: int) -> str:
            if node < n:
                return _newick_name(self.leaf_ids[node])
            a, b, h = self.merges[node - n]
            left = f"{render(a)}:{h - height_of[a]!r}"
            right = f"{render(b)}:{h - height_of[b]!r}"
            return f"({left},{right})"

        root = n + len(self.merges) - 1 if self.merges else 0
        return render(root) + ";\n"


def _newick_name(name: str) -> str:
    if _BARE_NEWICK.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


@dataclass(frozen=True)
class SpanningTree:
    """Minimum spanning tree edges, ascending by (weight, id pair)."""

    edges: tuple[tuple[str, str, float], ...]
    total_weight: float


def agglomerate(
    ids: Sequence[str], d: np.ndarray, linkage: str = "complete"
) -> Dendrogram:
    """Agglomerative clustering; merges the cluster pair with minimal linkage
    distance at every step.

    Complete linkage scores a cluster pair by the maximum pairwise member
    distance, single linkage by the minimum. Equal scores are resolved in
    favor of the lexicographically smallest (a, b) cluster index pair.
    """
    if linkage not in LINKAGES:
        raise InputError(f"unknown linkage {linkage!r}; expected {LINKAGES}")
    d = np.asarray(d, dtype=np.float64)
    validate_distance_matrix(d)
    n = len(ids)
    if d.shape != (n, n):
        raise InputError(f"distance matrix shape {d.shape} does not match {n} ids")
    if n == 0:
        raise InputError("cannot cluster an empty id list")
    total = 2 * n - 1
    work = np.full((total, total), np.inf, dtype=np.float64)
    work[:n, :n] = d
    active = np.zeros(total, dtype=bool)
    active[:n] = True
    merges: list[tuple[int, int, float]] = []
    reducer = np.maximum if linkage == "complete" else np.minimum
    for step in range(n - 1):
        m = n + step
        view = work[:m, :m].copy()
        view[~active[:m], :] = np.inf
        view[:, ~active[:m]] = np.inf
        iu = np.triu_indices(m, k=1)
        flat = view[iu]
        pos = int(np.argmin(flat))
        a = int(iu[0][pos])
        b = int(iu[1][pos])
        height = float(flat[pos])
        merges.append((a, b, height))
        merged = reducer(work[a, :m], work[b, :m])
        work[m, :m] = merged
        work[:m, m] = merged
        active[a] = False
        active[b] = False
        active[m] = True
    return Dendrogram(tuple(ids), tuple(merges), linkage)


def cut(dendrogram: Dendrogram, k: int) -> dict[str, str]:
    """Partition into exactly k clusters by undoing the last k-1 merges.

    Returns a mapping user_id -> cluster label, where a cluster is labeled by
    its lexicographically smallest member id.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise InputError(f"k must satisfy 1 <= k <= {n}, got {k}")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    alive = set(range(n))
    for s in range(n - k):
        a, b, _ = dendrogram.merges[s]
        members[n + s] = members.pop(a) + members.pop(b)
        alive.discard(a)
        alive.discard(b)
        alive.add(n + s)
    assignment: dict[str, str] = {}
    for cluster in alive:
        leaf_names = [dendrogram.leaf_ids[i] for i in members[cluster]]
        label = min(leaf_names)
        for name in leaf_names:
            assignment[name] = label
    return dict(sorted(assignment.items()))


def minimum_spanning_tree(ids: Sequence[str], d: np.ndarray) -> SpanningTree:
    """Kruskal over all pairs; ties ordered by (weight, min_id, max_id)."""
    d = np.asarray(d, dtype=np.float64)
    validate_distance_matrix(d)
    n = len(ids)
    if d.shape != (n, n):
        raise InputError(f"distance matrix shape {d.shape} does not match {n} ids")
    if n == 0:
        raise InputError("cannot build a spanning tree over zero ids")
    candidates = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = sorted((ids[i], ids[j]))
            candidates.append((float(d[i, j]), a, b))
    candidates.sort()

    parent = {uid: uid for uid in ids}
    size = {uid: 1 for uid in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: list[tuple[str, str, float]] = []
    total = 0.0
    for w, a, b in candidates:
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        edges.append((a, b, w))
        total += w
        if len(edges) == n - 1:
            break
    return SpanningTree(tuple(edges), total)


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def mst_to_dot(tree: SpanningTree, graph_name: str = "mst") -> str:
    """DOT text with edge weights at 6 decimal places."""
    lines = [f"graph {graph_name} {{"]
    for a, b, w in tree.edges:
        lines.append(f"  {_dot_quote(a)} -- {_dot_quote(b)} [weight={w:.6f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def mst_edges_csv(tree: SpanningTree) -> str:
    """Edge list CSV with full-precision weights."""
    from .matio import format_float

    lines = ["user_a,user_b,weight"]
    for a, b, w in tree.edges:
        lines.append(f"{_csv_field(a)},{_csv_field(b)},{format_float(w)}")
    return "\n".join(lines) + "\n"


def _csv_field(value: str) -> str:
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def baseline_user_similarity(
    corpus: Corpus, options: PrepOptions | None = None
) -> tuple[tuple[str, ...], np.ndarray]:
    """Text-only baseline: one concatenated document per user (thread titles
    excluded), plain tf-idf with the user documents as the corpus, cosine
    similarity, distance 1 - cosine.

    Returns (user_ids, distance matrix); the diagonal is forced to 0 even for
    users whose documents are empty after preprocessing.
    """
    if options is None:
        options = PrepOptions()
    user_ids = corpus.user_ids
    n_users = len(user_ids)
    if n_users == 0:
        return user_ids, np.zeros((0, 0), dtype=np.float64)
    docs: list[Counter] = []
    vocabulary: set[str] = set()
    for uid in user_ids:
        counter: Counter = Counter()
        for pid in corpus.user(uid).post_ids:
            counter.update(preprocess(corpus.post(pid).body, "", options))
        docs.append(counter)
        vocabulary.update(counter)
    terms = sorted(vocabulary)
    index = {t: i for i, t in enumerate(terms)}
    df = np.zeros(len(terms), dtype=np.int64)
    for counter in docs:
        for term in counter:
            df[index[term]] += 1

    indptr = np.zeros(n_users + 1, dtype=np.int64)
    all_indices: list[np.ndarray] = []
    all_data: list[np.ndarray] = []
    for i, counter in enumerate(docs):
        idx = np.fromiter(
            sorted(index[t] for t in counter), dtype=np.int64, count=len(counter)
        )
        lookup = {index[t]: c for t, c in counter.items()}
        tf = np.fromiter((lookup[j] for j in idx), dtype=np.int64, count=len(idx))
        weights = tf * np.log2(n_users / df[idx]) if len(idx) else np.empty(0)
        all_indices.append(idx)
        all_data.append(np.asarray(weights, dtype=np.float64))
        indptr[i + 1] = indptr[i] + len(idx)
    indices = (
        np.concatenate(all_indices) if all_indices else np.empty(0, dtype=np.int64)
    )
    data = np.concatenate(all_data) if all_data else np.empty(0, dtype=np.float64)
    indices = indices.astype(np.int64)
    norms = np.array(
        [float(np.sqrt(np.dot(w, w))) for w in all_data], dtype=np.float64
    )
    n_terms = max(len(terms), 1)
    cos = pairwise_cosine(indptr, indices, data, norms, n_terms)
    dist = np.maximum(0.0, 1.0 - cos)
    np.fill_diagonal(dist, 0.0)
    return user_ids, dist
