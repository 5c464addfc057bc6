"""Thread-aware post similarity and user network structure for forums.

Pipeline: corpus loading -> text preprocessing -> thread-modified tf-idf
similarity with an author constant -> principal-coordinate embedding ->
user centroids -> dendrograms and minimum spanning trees, plus synthetic
corpus generators and a CLI that wires the stages together.
"""

from .corpus import (
    Corpus,
    CorpusStats,
    Post,
    Thread,
    User,
    build_corpus,
    compute_stats,
    filter_users_by_post_count,
    load_corpus,
    write_jsonl,
)
from .embed import (
    Embedding,
    UserGeometry,
    average_pairwise_user_distance,
    principal_coordinates,
    project_new_posts,
    user_centroids,
)
from .exceptions import ConsistencyError, ForumsimError, InputError
from .netstruct import (
    Dendrogram,
    SpanningTree,
    agglomerate,
    baseline_user_similarity,
    cut,
    minimum_spanning_tree,
)
from .simcore import (
    DissimilarityMatrix,
    build_dissimilarity_matrix,
    cosine,
    cosine_matrix,
    post_distance,
    post_similarity,
    select_lambda,
    tfidf,
    thread_tfidf,
    weight_vector,
    weight_vectors,
)
from .synthgen import (
    GaussianGroupsConfig,
    SyntheticForumConfig,
    gaussian_group_dissimilarity,
    generate_forum,
    generate_gaussian_groups,
    generate_sparse_forum,
)
from .textprep import Dictionary, PrepOptions, build_dictionary, preprocess

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "Corpus",
    "CorpusStats",
    "Dendrogram",
    "Dictionary",
    "DissimilarityMatrix",
    "Embedding",
    "ForumsimError",
    "GaussianGroupsConfig",
    "InputError",
    "Post",
    "PrepOptions",
    "SpanningTree",
    "SyntheticForumConfig",
    "Thread",
    "User",
    "UserGeometry",
    "agglomerate",
    "average_pairwise_user_distance",
    "baseline_user_similarity",
    "build_corpus",
    "build_dictionary",
    "build_dissimilarity_matrix",
    "compute_stats",
    "cosine",
    "cosine_matrix",
    "cut",
    "filter_users_by_post_count",
    "gaussian_group_dissimilarity",
    "generate_forum",
    "generate_gaussian_groups",
    "generate_sparse_forum",
    "load_corpus",
    "minimum_spanning_tree",
    "post_distance",
    "post_similarity",
    "preprocess",
    "principal_coordinates",
    "project_new_posts",
    "select_lambda",
    "tfidf",
    "thread_tfidf",
    "user_centroids",
    "weight_vector",
    "weight_vectors",
    "write_jsonl",
]
