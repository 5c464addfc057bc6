"""Synthetic inputs: the 4-Gaussian smoothing demonstration and planted-
community forums for end-to-end validation.

All generators run on an explicitly named, portable PRNG (PCG64) and draw
normals through a hand-written Box-Muller transform, so a fixed seed gives
bit-identical output on any platform and the uniform stream is easy to
replicate in another language.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._kernels import pairwise_euclidean
from .corpus import Corpus, build_corpus
from .exceptions import InputError

__all__ = [
    "GaussianGroupsConfig",
    "generate_gaussian_groups",
    "gaussian_group_dissimilarity",
    "SyntheticForumConfig",
    "generate_forum",
    "generate_sparse_forum",
]


@dataclass(frozen=True)
class GaussianGroupsConfig:
    """Four 2-D normal clouds by default: means (+-1, +-1), covariance
    diag(3, 3), 100 points each."""

    n_groups: int = 4
    points_per_group: int = 100
    means: tuple[tuple[float, float], ...] = (
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    )
    covariance: tuple[tuple[float, float], tuple[float, float]] = (
        (3.0, 0.0),
        (0.0, 3.0),
    )
    seed: int = 0

    def validate(self) -> None:
        if self.n_groups < 1:
            raise InputError("n_groups must be >= 1")
        if self.points_per_group < 1:
            raise InputError("points_per_group must be >= 1")
        if len(self.means) != self.n_groups:
            raise InputError(
                f"means lists {len(self.means)} entries for {self.n_groups} groups"
            )
        if len(set(self.means)) != len(self.means):
            raise InputError("group means must be pairwise distinct")
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.shape != (2, 2):
            raise InputError("covariance must be 2x2")
        if cov[0, 1] != cov[1, 0]:
            raise InputError("covariance must be symmetric")
        if cov[0, 0] <= 0 or np.linalg.det(cov) <= 0:
            raise InputError("covariance must be positive definite")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "GaussianGroupsConfig":
        return _config_from_dict(cls, raw)


def _config_from_dict(cls, raw: Mapping):
    import dataclasses

    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def freeze(value):
        if isinstance(value, list):
            return tuple(freeze(v) for v in value)
        if isinstance(value, dict):
            return tuple(sorted((k, freeze(v)) for k, v in value.items()))
        return value

    return cls(**{k: freeze(v) for k, v in raw.items()})


def _box_muller_pair(rng: np.random.Generator) -> tuple[float, float]:
    # 1 - random() maps [0, 1) to (0, 1] so the log never sees zero
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)


def generate_gaussian_groups(
    config: GaussianGroupsConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample the configured groups; returns (points, labels) with points
    grouped contiguously in label order."""
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    chol = np.linalg.cholesky(np.asarray(config.covariance, dtype=np.float64))
    total = config.n_groups * config.points_per_group
    points = np.zeros((total, 2), dtype=np.float64)
    labels = np.zeros(total, dtype=np.int64)
    row = 0
    for g in range(config.n_groups):
        mean = np.asarray(config.means[g], dtype=np.float64)
        for _ in range(config.points_per_group):
            z = np.asarray(_box_muller_pair(rng))
            points[row] = mean + chol @ z
            labels[row] = g
            row += 1
    return points, labels


def gaussian_group_dissimilarity(
    points: np.ndarray, labels: np.ndarray, lam: float
) -> np.ndarray:
    """Distance fixture for the smoothing demonstration.

    Similarity is 1 - d/d_max (d_max the largest pairwise distance), plus
    ``lam`` for within-group pairs; the returned dissimilarity is the clamped
    complement, with a zero diagonal. Group labels play the role of authors.
    """
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    d = pairwise_euclidean(points)
    dmax = float(d.max()) if d.size else 0.0
    base = d / dmax if dmax > 0 else np.zeros_like(d)
    dist = np.maximum(0.0, base)
    if lam > 0:
        within = labels[:, None] == labels[None, :]
        dist[within] = np.maximum(0.0, dist[within] - lam)
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass(frozen=True)
class SyntheticForumConfig:
    """Planted-community forum parameters.

    ``topics`` may be an explicit per-community term distribution (a tuple of
    (term, probability) tuples per community); when omitted, the vocabulary
    is split into disjoint uniform community slices plus a shared background
    pool. Ranges are inclusive (lo, hi) pairs.
    """

    n_users: int = 12
    n_communities: int = 3
    topics: tuple | None = None
    posts_per_user: tuple[int, int] = (8, 12)
    thread_length: tuple[int, int] = (3, 6)
    cross_community_rate: float = 0.1
    seed: int = 0
    vocab_size: int = 60
    post_length: tuple[int, int] = (8, 20)
    title_length: tuple[int, int] = (4, 7)
    background_rate: float = 0.1

    def validate(self) -> None:
        if self.n_users < 1:
            raise InputError("n_users must be >= 1")
        if not 1 <= self.n_communities <= self.n_users:
            raise InputError("n_communities must be in [1, n_users]")
        for name in ("posts_per_user", "thread_length", "post_length", "title_length"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise InputError(f"{name} range ({lo}, {hi}) is empty or invalid")
        for name in ("cross_community_rate", "background_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {rate}")
        if self.topics is not None:
            if len(self.topics) != self.n_communities:
                raise InputError(
                    f"topics lists {len(self.topics)} distributions for "
                    f"{self.n_communities} communities"
                )
            for dist in self.topics:
                if not dist:
                    raise InputError("every topic needs at least one term")
                total = 0.0
                for term, prob in dist:
                    if not isinstance(term, str) or not term:
                        raise InputError("topic terms must be non-empty strings")
                    if prob < 0:
                        raise InputError("topic probabilities must be >= 0")
                    total += prob
                if abs(total - 1.0) > 1e-9:
                    raise InputError(
                        f"topic distribution sums to {total!r}, expected 1"
                    )

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SyntheticForumConfig":
        return _config_from_dict(cls, raw)


class _Topics:
    """Resolved per-community distributions plus the background pool."""

    def __init__(self, config: SyntheticForumConfig) -> None:
        if config.topics is not None:
            self.community_terms = []
            self.community_cum = []
            union: set[str] = set()
            for dist in config.topics:
                pairs = sorted(dist)
                terms = [t for t, _ in pairs]
                probs = np.array([p for _, p in pairs], dtype=np.float64)
                self.community_terms.append(terms)
                self.community_cum.append(np.cumsum(probs))
                union.update(terms)
            self.background_terms = sorted(union)
            n = len(self.background_terms)
            self.background_cum = np.cumsum(np.full(n, 1.0 / n))
            return
        background_size = max(1, config.vocab_size // 5)
        per_community = (config.vocab_size - background_size) // config.n_communities
        if per_community < 3:
            raise InputError(
                f"vocabulary too small for distinct topics: {config.vocab_size} "
                f"terms across {config.n_communities} communities"
            )
        self.background_terms = [f"base{i:03d}" for i in range(background_size)]
        self.background_cum = np.cumsum(
            np.full(background_size, 1.0 / background_size)
        )
        self.community_terms = []
        self.community_cum = []
        for c in range(config.n_communities):
            terms = [f"c{c}topic{i:03d}" for i in range(per_community)]
            self.community_terms.append(terms)
            self.community_cum.append(np.cumsum(np.full(per_community, 1.0 / per_community)))

    def draw(self, rng: np.random.Generator, community: int, background: bool) -> str:
        terms = self.background_terms if background else self.community_terms[community]
        cum = self.background_cum if background else self.community_cum[community]
        pos = int(np.searchsorted(cum, rng.random(), side="right"))
        return terms[min(pos, len(terms) - 1)]


def _generate_forum(config: SyntheticForumConfig, sparse: bool) -> Corpus:
    config.validate()
    topics = _Topics(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    width = max(2, len(str(config.n_users - 1)))
    user_ids = [f"u{i:0{width}d}" for i in range(config.n_users)]
    community_of = {uid: i % config.n_communities for i, uid in enumerate(user_ids)}
    quotas = {
        uid: int(rng.integers(config.posts_per_user[0], config.posts_per_user[1] + 1))
        for uid in user_ids
    }

    def candidates(community: int, foreign: bool) -> list[str]:
        return [
            uid
            for uid in user_ids
            if quotas[uid] > 0 and (community_of[uid] != community) == foreign
        ]

    records: list[tuple[str, str, str, str]] = []
    titles: dict[str, str] = {}
    post_counter = 0
    thread_counter = 0
    while any(quotas[uid] > 0 for uid in user_ids):
        community = thread_counter % config.n_communities
        thread_id = f"t{thread_counter:05d}"
        length = int(
            rng.integers(config.thread_length[0], config.thread_length[1] + 1)
        )
        title_len = int(
            rng.integers(config.title_length[0], config.title_length[1] + 1)
        )
        title = " ".join(
            topics.draw(rng, community, background=False) for _ in range(title_len)
        )
        members = 0
        for _ in range(length):
            foreign = rng.random() < config.cross_community_rate
            pool = candidates(community, foreign)
            if not pool:
                pool = candidates(community, not foreign)
            if not pool:
                break
            author = pool[int(rng.integers(0, len(pool)))]
            quotas[author] -= 1
            body_len = int(
                rng.integers(config.post_length[0], config.post_length[1] + 1)
            )
            if sparse:
                # globally unique tokens: zero body overlap corpus-wide
                words = [f"z{post_counter:06d}w{j:03d}" for j in range(body_len)]
            else:
                author_community = community_of[author]
                words = [
                    topics.draw(
                        rng,
                        author_community,
                        background=rng.random() < config.background_rate,
                    )
                    for _ in range(body_len)
                ]
            records.append(
                (f"p{post_counter:06d}", thread_id, author, " ".join(words))
            )
            post_counter += 1
            members += 1
        if members > 0:
            titles[thread_id] = title
            thread_counter += 1
    return build_corpus(records, titles)


def generate_forum(config: SyntheticForumConfig) -> Corpus:
    """Planted-community forum: users join communities round-robin, post
    bodies draw from their community's topic mixed with background terms,
    threads rotate through seeding communities, and foreign users join a
    thread with probability ``cross_community_rate``."""
    return _generate_forum(config, sparse=False)


def generate_sparse_forum(config: SyntheticForumConfig) -> Corpus:
    """Same skeleton as :func:`generate_forum`, but every post body is made
    of globally unique tokens, so posts share no body vocabulary at all; the
    thread titles are the only carriers of community signal."""
    return _generate_forum(config, sparse=True)
