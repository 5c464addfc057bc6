"""Command line interface.

Subcommands cover the pipeline stage by stage (ingest, stats, similarity,
embed, users, cluster, mst, scatter), end to end (pipeline), and synthetic
corpus generation (synth). Every intermediate artifact is a file, so each
stage can be re-run and inspected on its own. Exit codes: 0 success, 1
validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import matio
from .corpus import (
    Corpus,
    CorpusStats,
    compute_stats,
    filter_users_by_post_count,
    load_corpus,
    write_jsonl,
)
from .embed import Embedding, principal_coordinates, user_centroids
from .exceptions import ForumsimError, InputError
from .netstruct import (
    LINKAGES,
    agglomerate,
    baseline_user_similarity,
    cut,
    minimum_spanning_tree,
    mst_edges_csv,
    mst_to_dot,
)
from .simcore import (
    DissimilarityMatrix,
    build_dissimilarity_matrix,
    cosine_matrix,
    select_lambda,
    weight_vectors,
)
from .svgplot import scatter_svg
from .synthgen import (
    GaussianGroupsConfig,
    SyntheticForumConfig,
    gaussian_group_dissimilarity,
    generate_forum,
    generate_gaussian_groups,
    generate_sparse_forum,
)
from .textprep import PrepOptions, build_dictionary, load_stopwords

# CLI spelling -> internal embedding mode name.
_MODES = {"paper-literal": "paper_literal", "classical": "classical_pcoa"}

_DEFAULT_QUANTILE = 0.75


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors surface as InputError (exit code 1)."""

    def error(self, message):
        raise InputError(message)


@contextmanager
def _stage(name: str):
    """Prefix errors raised inside a pipeline stage with the stage name."""
    try:
        yield
    except ForumsimError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Shared argument groups


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="corpus file (JSONL, or posts.csv with --format csv)")
    p.add_argument(
        "--format",
        choices=("jsonl", "csv"),
        default="jsonl",
        help="input format (default: jsonl)",
    )
    p.add_argument(
        "--threads",
        metavar="PATH",
        default=None,
        help="threads.csv path (required with --format csv)",
    )


def _load(args) -> Corpus:
    if args.format == "csv" and args.threads is None:
        raise InputError("--threads is required with --format csv")
    with _stage("corpus"):
        return load_corpus(args.input, format=args.format, threads_path=args.threads)


def _add_prep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--stopwords",
        metavar="PATH",
        default=None,
        help="stopword list, one word per line (default: bundled English list)",
    )
    p.add_argument("--no-stem", action="store_true", help="skip stemming")
    p.add_argument(
        "--keep-html", action="store_true", help="treat markup as literal text"
    )


def _prep(args) -> PrepOptions:
    if args.stopwords is not None:
        words = load_stopwords(args.stopwords)
        return PrepOptions(
            stopwords=words, stem=not args.no_stem, strip_html=not args.keep_html
        )
    return PrepOptions(stem=not args.no_stem, strip_html=not args.keep_html)


def _add_lambda_args(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=None,
        metavar="X",
        help="author constant (>= 0); skips quantile selection",
    )
    group.add_argument(
        "--lambda-quantile",
        dest="lambda_quantile",
        type=float,
        default=None,
        metavar="Q",
        help=f"quantile in (0, 1) for automatic selection (default: {_DEFAULT_QUANTILE})",
    )


def _resolve_lambda(args, cosines: np.ndarray) -> tuple[float, dict]:
    if args.lam is not None:
        if args.lam < 0:
            raise InputError(f"--lambda must be >= 0, got {args.lam}")
        return args.lam, {"lambda": args.lam, "quantile": None, "source": "given"}
    q = args.lambda_quantile if args.lambda_quantile is not None else _DEFAULT_QUANTILE
    lam = select_lambda(cosines, q)
    return lam, {"lambda": lam, "quantile": q, "source": "quantile"}


def _add_mode_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--mode",
        choices=tuple(_MODES),
        default="paper-literal",
        help="embedding construction (default: paper-literal)",
    )
    p.add_argument(
        "--dims",
        default="auto",
        metavar="K",
        help="number of coordinates, or 'auto' for the 90%% spectrum rule",
    )


def _parse_dims(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise InputError(f"--dims must be a positive integer or 'auto', got {text!r}")


def _parse_axes(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"--axes must be two comma-separated indices, got {text!r}")
    try:
        a, b = (int(part) for part in parts)
    except ValueError:
        raise InputError(f"--axes must be two integers, got {text!r}")
    if a < 1 or b < 1:
        raise InputError("axis indices are 1-based and must be >= 1")
    if a == b:
        raise InputError("the two axes must differ")
    return a, b


def _method_matrix(corpus: Corpus, options: PrepOptions, args):
    """textprep + simcore stages shared by cmd_similarity and cmd_pipeline."""
    with _stage("textprep"):
        dictionary, term_vectors, thread_vectors = build_dictionary(corpus, options)
    with _stage("simcore"):
        vectors = weight_vectors(corpus, dictionary, term_vectors, thread_vectors)
        ordered = [vectors[pid] for pid in corpus.post_ids]
        cosines = cosine_matrix(ordered, n_terms=len(dictionary))
        lam, report = _resolve_lambda(args, cosines)
        matrix = build_dissimilarity_matrix(corpus, vectors, lam)
    return matrix, report


def _stats_table(stats: CorpusStats) -> str:
    rows = (
        ("words-per-post", stats.post_word_count_quantiles),
        ("posts-per-user", stats.posts_per_user_quantiles),
        ("posts-per-thread", stats.posts_per_thread_quantiles),
    )
    lines = [
        f"posts   {stats.n_posts}",
        f"threads {stats.n_threads}",
        f"users   {stats.n_users}",
        "",
        "metric           " + "".join(f"{h:>9}" for h in ("min", "q1", "median", "q3", "max")),
    ]
    for name, quantiles in rows:
        cells = "".join(f"{format(v, 'g'):>9}" for v in quantiles)
        lines.append(f"{name:<17}{cells}")
    return "\n".join(lines) + "\n"


def _read_groups_csv(path) -> dict[str, str]:
    """id -> group from a CSV whose first column is the id and which has a
    'group' or 'user_id' column (the synth gaussian points file qualifies)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty groups file")
        id_field = reader.fieldnames[0]
        group_field = None
        for candidate in ("group", "user_id"):
            if candidate in reader.fieldnames and candidate != id_field:
                group_field = candidate
                break
        if group_field is None:
            raise InputError(
                f"{path}: no 'group' or 'user_id' column next to {id_field!r}"
            )
        out: dict[str, str] = {}
        for row in reader:
            out[row[id_field]] = row[group_field]
    return out


def _group_points(
    ids, coords: np.ndarray, axes: tuple[int, int], group_of: dict[str, str]
) -> dict[str, np.ndarray]:
    missing = [i for i in ids if i not in group_of]
    if missing:
        raise InputError(f"no group for embedded ids: {', '.join(missing[:5])}")
    buckets: dict[str, list[int]] = {}
    for row, doc_id in enumerate(ids):
        buckets.setdefault(group_of[doc_id], []).append(row)
    cols = (axes[0] - 1, axes[1] - 1)
    return {
        g: coords[np.asarray(rows), :][:, cols] for g, rows in sorted(buckets.items())
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_ingest(args) -> int:
    corpus = _load(args)
    if args.min_posts != 1 or args.max_posts is not None:
        with _stage("filter"):
            corpus = filter_users_by_post_count(corpus, args.min_posts, args.max_posts)
    if args.out is not None:
        write_jsonl(corpus, args.out)
    sys.stdout.write(_stats_table(compute_stats(corpus)))
    return 0


def cmd_stats(args) -> int:
    corpus = _load(args)
    sys.stdout.write(_stats_table(compute_stats(corpus)))
    return 0


def cmd_similarity(args) -> int:
    corpus = _load(args)
    options = _prep(args)
    matrix, report = _method_matrix(corpus, options, args)
    matrix.to_csv(args.out)
    if args.report is not None:
        _write_json(args.report, report)
    print(f"lambda = {report['lambda']!r} ({report['source']})")
    return 0


def cmd_embed(args) -> int:
    with _stage("embed"):
        matrix = DissimilarityMatrix.from_csv(args.matrix)
        embedding = principal_coordinates(
            matrix, k=_parse_dims(args.dims), mode=_MODES[args.mode]
        )
    matio.write_embedding(embedding.doc_ids, embedding.coords, args.out)
    sv_path = args.singular_values
    if sv_path is None:
        out = Path(args.out)
        sv_path = out.with_name(out.stem + ".singular_values.txt")
    matio.write_values(embedding.singular_values, sv_path)
    print(f"k = {embedding.k}")
    if embedding.mode == "classical_pcoa":
        print(f"dropped_mass = {embedding.dropped_mass!r}")
    return 0


def _embedding_from_csv(path) -> Embedding:
    ids, coords = matio.read_embedding(path)
    return Embedding(
        doc_ids=ids,
        coords=coords,
        singular_values=np.zeros(coords.shape[1], dtype=np.float64),
        mode="paper_literal",
    )


def cmd_users(args) -> int:
    args.input = args.corpus
    corpus = _load(args)
    with _stage("embed"):
        embedding = _embedding_from_csv(args.embedding)
        geometry = user_centroids(embedding, corpus)
    matio.write_embedding(
        geometry.user_ids, geometry.centroids, args.centroids, id_field="user_id"
    )
    matio.write_labeled_matrix(geometry.user_ids, geometry.distances, args.distances)
    if geometry.excluded_user_ids:
        print(
            "excluded users with no embedded posts: "
            + ", ".join(geometry.excluded_user_ids),
            file=sys.stderr,
        )
    return 0


def _write_clusters_csv(path, clusters: dict[str, str]) -> None:
    lines = ["user_id,cluster"]
    for user_id in sorted(clusters):
        lines.append(f"{_csv_cell(user_id)},{_csv_cell(clusters[user_id])}")
    _write_text(path, "\n".join(lines) + "\n")


def _csv_cell(value: str) -> str:
    if any(ch in value for ch in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def cmd_cluster(args) -> int:
    ids, values = matio.read_labeled_matrix(args.matrix)
    with _stage("netstruct"):
        dendrogram = agglomerate(ids, values, linkage=args.linkage)
    if args.out_json is not None:
        _write_text(args.out_json, dendrogram.to_json())
    if args.out_newick is not None:
        _write_text(args.out_newick, dendrogram.to_newick())
    if args.out_json is None and args.out_newick is None:
        sys.stdout.write(dendrogram.to_json())
    if args.cut is not None:
        with _stage("netstruct"):
            clusters = cut(dendrogram, args.cut)
        if args.clusters_out is not None:
            _write_clusters_csv(args.clusters_out, clusters)
        else:
            for user_id in sorted(clusters):
                print(f"{user_id}\t{clusters[user_id]}")
    return 0


def cmd_mst(args) -> int:
    ids, values = matio.read_labeled_matrix(args.matrix)
    with _stage("netstruct"):
        tree = minimum_spanning_tree(ids, values)
    if args.dot is not None:
        _write_text(args.dot, mst_to_dot(tree))
    if args.edges is not None:
        _write_text(args.edges, mst_edges_csv(tree))
    if args.dot is None and args.edges is None:
        sys.stdout.write(mst_to_dot(tree))
    return 0


def cmd_scatter(args) -> int:
    ids, coords = matio.read_embedding(args.embedding)
    axes = _parse_axes(args.axes)
    if coords.shape[1] < max(axes):
        raise InputError(
            f"axis {max(axes)} out of range: embedding has {coords.shape[1]} coordinates"
        )
    if args.corpus is not None:
        args.input = args.corpus
        corpus = _load(args)
        group_of = {p.post_id: p.user_id for p in corpus.posts()}
    else:
        group_of = _read_groups_csv(args.groups)
    point_groups = _group_points(ids, coords, axes, group_of)
    svg = scatter_svg(
        point_groups, x_label=f"PC{axes[0]}", y_label=f"PC{axes[1]}"
    )
    _write_text(args.out, svg)
    return 0


def cmd_pipeline(args) -> int:
    corpus = _load(args)
    options = _prep(args)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    matrix, report = _method_matrix(corpus, options, args)
    _write_json(outdir / "lambda_report.json", report)

    with _stage("embed"):
        embedding = principal_coordinates(
            matrix, k=_parse_dims(args.dims), mode=_MODES[args.mode]
        )
        geometry = user_centroids(embedding, corpus)
    matio.write_embedding(embedding.doc_ids, embedding.coords, outdir / "embedding.csv")
    matio.write_values(embedding.singular_values, outdir / "singular_values.txt")
    matio.write_embedding(
        geometry.user_ids,
        geometry.centroids,
        outdir / "user_centroids.csv",
        id_field="user_id",
    )
    matio.write_labeled_matrix(
        geometry.user_ids, geometry.distances, outdir / "user_distances.csv"
    )

    with _stage("netstruct"):
        dendrogram = agglomerate(geometry.user_ids, geometry.distances, args.linkage)
        tree = minimum_spanning_tree(geometry.user_ids, geometry.distances)
    _write_text(outdir / "dendrogram.json", dendrogram.to_json())
    _write_text(outdir / "dendrogram.newick", dendrogram.to_newick())
    _write_text(outdir / "mst.dot", mst_to_dot(tree))
    _write_text(outdir / "mst_edges.csv", mst_edges_csv(tree))
    if args.cut is not None:
        with _stage("netstruct"):
            clusters = cut(dendrogram, args.cut)
        _write_clusters_csv(outdir / "clusters.csv", clusters)

    if args.baseline:
        with _stage("baseline"):
            base_ids, base_dist = baseline_user_similarity(corpus, options)
            base_dendrogram = agglomerate(base_ids, base_dist, args.linkage)
        matio.write_labeled_matrix(
            base_ids, base_dist, outdir / "baseline_user_distances.csv"
        )
        _write_text(outdir / "baseline_dendrogram.json", base_dendrogram.to_json())
        _write_text(outdir / "baseline_dendrogram.newick", base_dendrogram.to_newick())
        if args.cut is not None:
            with _stage("baseline"):
                base_clusters = cut(base_dendrogram, args.cut)
            _write_clusters_csv(outdir / "baseline_clusters.csv", base_clusters)

    print(
        f"posts={corpus.n_posts} users={corpus.n_users} "
        f"lambda={report['lambda']!r} k={embedding.k}"
    )
    return 0


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return raw


def cmd_synth(args) -> int:
    raw = _load_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.kind in ("forum", "sparse-forum"):
        if args.matrix_out is not None or args.lam is not None:
            raise InputError("--matrix-out/--lambda only apply to 'gaussian'")
        with _stage("synthgen"):
            config = SyntheticForumConfig.from_dict(raw)
            if args.kind == "forum":
                corpus = generate_forum(config)
            else:
                corpus = generate_sparse_forum(config)
        write_jsonl(corpus, args.out)
        print(
            f"posts={corpus.n_posts} threads={corpus.n_threads} "
            f"users={corpus.n_users}"
        )
        return 0

    with _stage("synthgen"):
        config = GaussianGroupsConfig.from_dict(raw)
        points, labels = generate_gaussian_groups(config)
    width = max(3, len(str(max(len(points) - 1, 0))))
    ids = tuple(f"pt{i:0{width}d}" for i in range(len(points)))
    lines = ["point_id,x,y,group"]
    for i, point_id in enumerate(ids):
        lines.append(
            f"{point_id},{matio.format_float(points[i, 0])},"
            f"{matio.format_float(points[i, 1])},g{int(labels[i])}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.matrix_out is not None:
        lam = args.lam if args.lam is not None else 0.0
        if lam < 0:
            raise InputError(f"--lambda must be >= 0, got {lam}")
        with _stage("synthgen"):
            values = gaussian_group_dissimilarity(points, labels, lam)
        matio.write_labeled_matrix(ids, values, args.matrix_out)
    print(f"points={len(points)} groups={config.n_groups}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> _Parser:
    parser = _Parser(
        prog="forumsim",
        description="Thread-aware post similarity, embeddings, and user network structure.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a corpus, filter users, write normalized JSONL")
    _add_input_args(p)
    p.add_argument("--min-posts", type=int, default=1, help="keep users with >= N posts")
    p.add_argument("--max-posts", type=int, default=None, help="keep users with <= N posts")
    p.add_argument("--out", metavar="PATH", default=None, help="normalized JSONL output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="print the corpus summary table")
    _add_input_args(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("similarity", help="write the post dissimilarity matrix CSV")
    _add_input_args(p)
    _add_prep_args(p)
    _add_lambda_args(p)
    p.add_argument("--out", metavar="PATH", required=True, help="matrix CSV output")
    p.add_argument("--report", metavar="PATH", default=None, help="lambda report JSON output")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("embed", help="principal coordinates of a dissimilarity matrix")
    p.add_argument("matrix", help="dissimilarity matrix CSV")
    _add_mode_args(p)
    p.add_argument("--out", metavar="PATH", required=True, help="embedding CSV output")
    p.add_argument(
        "--singular-values",
        metavar="PATH",
        default=None,
        help="sidecar file (default: <out>.singular_values.txt)",
    )
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("users", help="user centroids and centroid distances")
    p.add_argument("embedding", help="embedding CSV")
    p.add_argument("--corpus", metavar="PATH", required=True, help="corpus file")
    p.add_argument(
        "--format", choices=("jsonl", "csv"), default="jsonl", help="corpus format"
    )
    p.add_argument("--threads", metavar="PATH", default=None, help="threads.csv path")
    p.add_argument("--centroids", metavar="PATH", required=True, help="centroid CSV output")
    p.add_argument("--distances", metavar="PATH", required=True, help="distance matrix CSV output")
    p.set_defaults(func=cmd_users)

    p = sub.add_parser("cluster", help="agglomerative dendrogram of a distance matrix")
    p.add_argument("matrix", help="distance matrix CSV")
    p.add_argument("--linkage", choices=LINKAGES, default="complete")
    p.add_argument("--out-json", metavar="PATH", default=None, help="dendrogram JSON output")
    p.add_argument("--out-newick", metavar="PATH", default=None, help="Newick output")
    p.add_argument("--cut", type=int, default=None, metavar="K", help="also cut into K clusters")
    p.add_argument("--clusters-out", metavar="PATH", default=None, help="cluster CSV output")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("mst", help="minimum spanning tree of a distance matrix")
    p.add_argument("matrix", help="distance matrix CSV")
    p.add_argument("--dot", metavar="PATH", default=None, help="DOT output")
    p.add_argument("--edges", metavar="PATH", default=None, help="edge list CSV output")
    p.set_defaults(func=cmd_mst)

    p = sub.add_parser("scatter", help="SVG scatter of two embedding coordinates")
    p.add_argument("embedding", help="embedding CSV")
    color = p.add_mutually_exclusive_group(required=True)
    color.add_argument("--corpus", metavar="PATH", default=None, help="color points by author")
    color.add_argument(
        "--groups", metavar="PATH", default=None, help="color points by a group CSV"
    )
    p.add_argument(
        "--format", choices=("jsonl", "csv"), default="jsonl", help="corpus format"
    )
    p.add_argument("--threads", metavar="PATH", default=None, help="threads.csv path")
    p.add_argument("--axes", default="1,2", help="1-based coordinate pair (default: 1,2)")
    p.add_argument("--out", metavar="PATH", required=True, help="SVG output")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    _add_input_args(p)
    _add_prep_args(p)
    _add_lambda_args(p)
    _add_mode_args(p)
    p.add_argument("--linkage", choices=LINKAGES, default="complete")
    p.add_argument("--cut", type=int, default=None, metavar="K", help="also cut into K clusters")
    p.add_argument("--baseline", action="store_true", help="also run the text-only baseline")
    p.add_argument("--outdir", metavar="DIR", required=True, help="artifact directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="generate synthetic data")
    p.add_argument("kind", choices=("forum", "sparse-forum", "gaussian"))
    p.add_argument("--config", metavar="PATH", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", metavar="PATH", required=True, help="corpus JSONL or points CSV")
    p.add_argument(
        "--matrix-out",
        metavar="PATH",
        default=None,
        help="gaussian only: dissimilarity matrix CSV",
    )
    p.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=None,
        metavar="X",
        help="gaussian only: within-group constant for --matrix-out (default: 0)",
    )
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        # Unreadable inputs and unwritable outputs are usage errors.
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    except ForumsimError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
