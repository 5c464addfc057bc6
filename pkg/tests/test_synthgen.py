"""Tests for the synthetic generators: Gaussian groups and planted forums."""

import io
import math

import numpy as np
import pytest

from forumsim.corpus import load_jsonl, write_jsonl
from forumsim.embed import principal_coordinates, user_centroids, user_distance_matrix
from forumsim.exceptions import InputError
from forumsim.netstruct import agglomerate, baseline_user_similarity, cut
from forumsim.simcore import (
    DissimilarityMatrix,
    build_dissimilarity_matrix,
    cosine,
    select_lambda,
    weight_vectors,
)
from forumsim.synthgen import (
    GaussianGroupsConfig,
    SyntheticForumConfig,
    gaussian_group_dissimilarity,
    generate_forum,
    generate_gaussian_groups,
    generate_sparse_forum,
)
from forumsim.textprep import build_dictionary


def test_gaussian_default_shape_and_layout():
    points, labels = generate_gaussian_groups(GaussianGroupsConfig())
    assert points.shape == (400, 2)
    assert labels.shape == (400,)
    # group-major: labels are 100 zeros, then 100 ones, ...
    assert labels.tolist() == sorted(labels.tolist())
    for g in range(4):
        assert (labels == g).sum() == 100


def test_gaussian_empirical_means_near_design_means():
    config = GaussianGroupsConfig()
    points, labels = generate_gaussian_groups(config)
    # each coordinate has variance 3, so the mean of 100 draws has standard
    # deviation sqrt(3)/10; allow 3 sigma
    bound = 3.0 * math.sqrt(3.0) / math.sqrt(100)
    for g, mean in enumerate(config.means):
        sample = points[labels == g].mean(axis=0)
        assert abs(sample[0] - mean[0]) < bound
        assert abs(sample[1] - mean[1]) < bound


def test_gaussian_single_point_per_group():
    config = GaussianGroupsConfig(points_per_group=1)
    points, labels = generate_gaussian_groups(config)
    assert points.shape == (4, 2)
    assert labels.tolist() == [0, 1, 2, 3]


def test_gaussian_deterministic():
    a = generate_gaussian_groups(GaussianGroupsConfig(seed=9))
    b = generate_gaussian_groups(GaussianGroupsConfig(seed=9))
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])
    c = generate_gaussian_groups(GaussianGroupsConfig(seed=10))
    assert not np.array_equal(a[0], c[0])


def test_gaussian_first_point_matches_hand_box_muller():
    # identity covariance isolates the Box-Muller draw: the first point is
    # mean + (r cos, r sin) computed from the first two uniforms of PCG64
    config = GaussianGroupsConfig(
        n_groups=1,
        points_per_group=1,
        means=((2.0, -3.0),),
        covariance=((1.0, 0.0), (0.0, 1.0)),
        seed=123,
    )
    points, _ = generate_gaussian_groups(config)
    rng = np.random.Generator(np.random.PCG64(123))
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    r = math.sqrt(-2.0 * math.log(u1))
    expected = (2.0 + r * math.cos(2 * math.pi * u2), -3.0 + r * math.sin(2 * math.pi * u2))
    assert points[0, 0] == expected[0]
    assert points[0, 1] == expected[1]


def test_gaussian_sample_covariance_converges():
    config = GaussianGroupsConfig(
        n_groups=1,
        points_per_group=10_000,
        means=((0.0, 0.0),),
        covariance=((3.0, 1.0), (1.0, 2.0)),
        seed=5,
    )
    points, _ = generate_gaussian_groups(config)
    sample = np.cov(points.T)
    target = np.asarray(config.covariance)
    # 5% of the largest variance as an absolute band
    assert np.abs(sample - target).max() < 0.05 * 3.0


def test_gaussian_config_validation():
    with pytest.raises(InputError, match="n_groups"):
        GaussianGroupsConfig(n_groups=0, means=()).validate()
    with pytest.raises(InputError, match="points_per_group"):
        GaussianGroupsConfig(points_per_group=0).validate()
    with pytest.raises(InputError, match="means"):
        GaussianGroupsConfig(n_groups=2).validate()
    with pytest.raises(InputError, match="distinct"):
        GaussianGroupsConfig(
            n_groups=2, means=((1.0, 1.0), (1.0, 1.0))
        ).validate()
    with pytest.raises(InputError, match="symmetric"):
        GaussianGroupsConfig(
            covariance=((3.0, 1.0), (0.0, 3.0))
        ).validate()
    with pytest.raises(InputError, match="positive definite"):
        GaussianGroupsConfig(
            covariance=((1.0, 2.0), (2.0, 1.0))
        ).validate()


def test_gaussian_config_from_dict():
    config = GaussianGroupsConfig.from_dict(
        {"n_groups": 2, "means": [[0.0, 0.0], [4.0, 0.0]], "seed": 7}
    )
    assert config.n_groups == 2
    assert config.means == ((0.0, 0.0), (4.0, 0.0))
    with pytest.raises(InputError, match="unknown config keys"):
        GaussianGroupsConfig.from_dict({"n_grops": 2})


def test_gaussian_dissimilarity_properties():
    points, labels = generate_gaussian_groups(GaussianGroupsConfig(seed=2))
    for lam in (0.0, 0.5):
        d = gaussian_group_dissimilarity(points, labels, lam)
        assert (d == d.T).all()
        assert (np.diagonal(d) == 0).all()
        assert d.min() >= 0.0
        assert d.max() <= 1.0
    base = gaussian_group_dissimilarity(points, labels, 0.0)
    assert base.max() == 1.0
    shifted = gaussian_group_dissimilarity(points, labels, 0.25)
    within = labels[:, None] == labels[None, :]
    off = ~np.eye(len(labels), dtype=bool)
    assert np.array_equal(shifted[~within & off], base[~within & off])
    assert np.array_equal(
        shifted[within & off], np.maximum(0.0, base[within & off] - 0.25)
    )
    with pytest.raises(InputError, match="lambda"):
        gaussian_group_dissimilarity(points, labels, -0.5)


def test_forum_deterministic_and_round_trips():
    config = SyntheticForumConfig(seed=21)
    a = generate_forum(config)
    b = generate_forum(config)
    assert a == b
    buf = io.StringIO()
    write_jsonl(a, buf)
    assert load_jsonl(io.StringIO(buf.getvalue())) == a


def test_forum_covers_all_users_with_quota_range():
    config = SyntheticForumConfig(n_users=9, seed=3)
    corpus = generate_forum(config)
    assert corpus.n_users == 9
    lo, hi = config.posts_per_user
    for user in corpus.users():
        assert lo <= len(user.post_ids) <= hi
    for thread in corpus.threads():
        assert len(thread.post_ids) >= 1
        assert corpus.title_of(thread.thread_id)


def test_forum_single_user():
    corpus = generate_forum(SyntheticForumConfig(n_users=1, n_communities=1))
    assert corpus.n_users == 1
    _, d = baseline_user_similarity(corpus)
    assert d.shape == (1, 1)
    assert d[0, 0] == 0.0


def test_forum_config_validation():
    with pytest.raises(InputError, match="n_users"):
        SyntheticForumConfig(n_users=0).validate()
    with pytest.raises(InputError, match="n_communities"):
        SyntheticForumConfig(n_users=2, n_communities=3).validate()
    with pytest.raises(InputError, match="posts_per_user"):
        SyntheticForumConfig(posts_per_user=(5, 2)).validate()
    with pytest.raises(InputError, match="cross_community_rate"):
        SyntheticForumConfig(cross_community_rate=1.5).validate()
    with pytest.raises(InputError, match="vocabulary too small"):
        generate_forum(SyntheticForumConfig(vocab_size=8))


def test_forum_topic_validation():
    good = (
        (("alpha", 0.5), ("beta", 0.5)),
        (("gamma", 1.0),),
    )
    config = SyntheticForumConfig(n_communities=2, n_users=4, topics=good)
    config.validate()
    with pytest.raises(InputError, match="topics lists"):
        SyntheticForumConfig(n_communities=3, topics=good).validate()
    with pytest.raises(InputError, match="sums to"):
        SyntheticForumConfig(
            n_communities=1, topics=((("a", 0.4), ("b", 0.4)),)
        ).validate()
    with pytest.raises(InputError, match="at least one term"):
        SyntheticForumConfig(n_communities=1, topics=((),)).validate()
    with pytest.raises(InputError, match="probabilities"):
        SyntheticForumConfig(
            n_communities=1, topics=((("a", -0.5), ("b", 1.5)),)
        ).validate()


def test_forum_config_from_dict_freezes_lists():
    config = SyntheticForumConfig.from_dict(
        {
            "n_users": 4,
            "n_communities": 2,
            "topics": [[["alpha", 0.5], ["beta", 0.5]], [["gamma", 1.0]]],
            "posts_per_user": [3, 5],
        }
    )
    assert config.posts_per_user == (3, 5)
    assert config.topics == ((("alpha", 0.5), ("beta", 0.5)), (("gamma", 1.0),))
    with pytest.raises(InputError, match="unknown config keys"):
        SyntheticForumConfig.from_dict({"users": 4})


def test_sparse_forum_bodies_globally_disjoint():
    corpus = generate_sparse_forum(SyntheticForumConfig(n_users=6, seed=4))
    seen: set[str] = set()
    for post in corpus.posts():
        tokens = set(post.body.split())
        assert not tokens & seen
        seen.update(tokens)


def test_sparse_forum_plain_body_cosine_zero_but_method_positive():
    corpus = generate_sparse_forum(SyntheticForumConfig(n_users=6, seed=8))
    dictionary, tvs, thvs = build_dictionary(corpus)
    wvs = weight_vectors(corpus, dictionary, tvs, thvs)
    thread = next(t for t in corpus.threads() if len(t.post_ids) >= 2)
    a, b = thread.post_ids[0], thread.post_ids[1]
    # titles repeat topic terms, so the method cosine is positive
    assert cosine(wvs[a], wvs[b]) > 0.0


def community_of(corpus, config):
    user_ids = sorted(corpus.user_ids)
    return {uid: i % config.n_communities for i, uid in enumerate(user_ids)}


def recovered_clusters(user_ids, d, k):
    dendrogram = agglomerate(user_ids, d, "complete")
    return cut(dendrogram, k)


def agreement_is_perfect(assignment, truth):
    """Clusters match the planted communities up to label renaming."""
    by_label: dict[str, set[int]] = {}
    for uid, label in assignment.items():
        by_label.setdefault(label, set()).add(truth[uid])
    communities = [next(iter(v)) for v in by_label.values() if len(v) == 1]
    return all(len(v) == 1 for v in by_label.values()) and len(
        set(communities)
    ) == len(by_label)


def test_disjoint_communities_recovered_by_both_methods():
    config = SyntheticForumConfig(
        n_users=8,
        n_communities=2,
        cross_community_rate=0.0,
        background_rate=0.0,
        seed=13,
        vocab_size=60,
    )
    corpus = generate_forum(config)
    truth = community_of(corpus, config)

    user_ids, baseline = baseline_user_similarity(corpus)
    assert agreement_is_perfect(recovered_clusters(user_ids, baseline, 2), truth)

    dictionary, tvs, thvs = build_dictionary(corpus)
    wvs = weight_vectors(corpus, dictionary, tvs, thvs)
    lam_free = build_dissimilarity_matrix(corpus, wvs, 0.0)
    lam = select_lambda(1.0 - lam_free.values)
    matrix = build_dissimilarity_matrix(corpus, wvs, lam)
    embedding = principal_coordinates(matrix, k="auto")
    geometry = user_centroids(embedding, corpus)
    d = user_distance_matrix(geometry)
    assert geometry.user_ids == user_ids
    assert agreement_is_perfect(recovered_clusters(user_ids, d, 2), truth)
