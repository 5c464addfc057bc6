"""End-to-end tests of the command line interface (in-process main calls)."""

import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from forumsim import cli, matio
from forumsim.corpus import load_corpus
from forumsim.simcore import DissimilarityMatrix, build_dissimilarity_matrix, weight_vectors
from forumsim.textprep import PrepOptions, build_dictionary

POSTS = (
    ("p1", "t1", "alice", "Database migration needs careful planning and testing"),
    ("p2", "t1", "bob", "The migration script crashed during schema updates"),
    ("p3", "t1", "alice", "Test the data backup before any migration runs"),
    ("p4", "t1", "carol", "Schema changes require a full database backup"),
    ("p5", "t2", "bob", "The kernel crashed after the driver update"),
    ("p6", "t2", "carol", "Driver updates often cause kernel panics"),
    ("p7", "t2", "dave", "Check the crash logs for the kernel version"),
)
TITLES = {"t1": "data migration tips", "t2": "kernel crash report"}


def write_corpus(path):
    lines = [
        json.dumps({"type": "thread", "thread_id": tid, "title": title})
        for tid, title in TITLES.items()
    ]
    for post_id, thread_id, user_id, body in POSTS:
        lines.append(
            json.dumps(
                {
                    "type": "post",
                    "post_id": post_id,
                    "thread_id": thread_id,
                    "user_id": user_id,
                    "body": body,
                }
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def corpus_path(tmp_path):
    return write_corpus(tmp_path / "corpus.jsonl")


def run(argv):
    return cli.main(list(argv))


def test_no_args_is_usage_error(capsys):
    assert run([]) == 1
    assert "error:" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "usage:" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == 1


def test_stats_table(corpus_path, capsys):
    assert run(["stats", str(corpus_path)]) == 0
    out = capsys.readouterr().out
    assert "posts   7" in out
    assert "threads 2" in out
    assert "users   4" in out
    thread_row = next(
        line for line in out.splitlines() if line.startswith("posts-per-thread")
    )
    assert thread_row.split() == ["posts-per-thread", "3", "3", "3", "4", "4"]


def test_stats_missing_file(tmp_path, capsys):
    assert run(["stats", str(tmp_path / "nope.jsonl")]) == 1
    assert "error:" in capsys.readouterr().err


def test_stats_malformed_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(
        '{"type": "thread", "thread_id": "t1", "title": "x"}\n{oops\n',
        encoding="utf-8",
    )
    assert run(["stats", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_stats_csv_format(tmp_path, capsys):
    posts = tmp_path / "posts.csv"
    threads = tmp_path / "threads.csv"
    rows = ["post_id,thread_id,user_id,body"]
    rows += [",".join(p) for p in POSTS]
    posts.write_text("\n".join(rows) + "\n", encoding="utf-8")
    threads.write_text(
        "thread_id,title\n"
        + "\n".join(f"{tid},{title}" for tid, title in TITLES.items())
        + "\n",
        encoding="utf-8",
    )
    assert run(["stats", str(posts), "--format", "csv", "--threads", str(threads)]) == 0
    assert "posts   7" in capsys.readouterr().out


def test_csv_format_requires_threads(tmp_path, capsys):
    posts = tmp_path / "posts.csv"
    posts.write_text("post_id,thread_id,user_id,body\n", encoding="utf-8")
    assert run(["stats", str(posts), "--format", "csv"]) == 1
    assert "--threads is required" in capsys.readouterr().err


def test_ingest_filter_and_roundtrip(corpus_path, tmp_path, capsys):
    out = tmp_path / "norm.jsonl"
    assert run(
        ["ingest", str(corpus_path), "--min-posts", "2", "--out", str(out)]
    ) == 0
    table = capsys.readouterr().out
    assert "posts   6" in table
    assert "users   3" in table
    reloaded = load_corpus(str(out))
    assert reloaded.user_ids == ("alice", "bob", "carol")
    assert reloaded.n_posts == 6


def test_similarity_given_lambda_matches_library(corpus_path, tmp_path, capsys):
    out = tmp_path / "matrix.csv"
    report_path = tmp_path / "report.json"
    code = run(
        [
            "similarity",
            str(corpus_path),
            "--lambda",
            "0",
            "--out",
            str(out),
            "--report",
            str(report_path),
        ]
    )
    assert code == 0
    assert "lambda = 0.0 (given)" in capsys.readouterr().out

    corpus = load_corpus(str(corpus_path))
    options = PrepOptions()
    dictionary, term_vectors, thread_vectors = build_dictionary(corpus, options)
    vectors = weight_vectors(corpus, dictionary, term_vectors, thread_vectors)
    expected = build_dissimilarity_matrix(corpus, vectors, 0.0)

    loaded = DissimilarityMatrix.from_csv(str(out))
    assert loaded.doc_ids == expected.doc_ids
    assert np.array_equal(loaded.values, expected.values)

    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report == {"lambda": 0.0, "quantile": None, "source": "given"}


def test_similarity_quantile_report(corpus_path, tmp_path):
    out = tmp_path / "matrix.csv"
    report_path = tmp_path / "report.json"
    assert run(
        ["similarity", str(corpus_path), "--out", str(out), "--report", str(report_path)]
    ) == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["source"] == "quantile"
    assert report["quantile"] == 0.75
    assert report["lambda"] > 0

    corpus = load_corpus(str(corpus_path))
    options = PrepOptions()
    dictionary, term_vectors, thread_vectors = build_dictionary(corpus, options)
    vectors = weight_vectors(corpus, dictionary, term_vectors, thread_vectors)
    expected = build_dissimilarity_matrix(corpus, vectors, report["lambda"])
    loaded = DissimilarityMatrix.from_csv(str(out))
    assert np.array_equal(loaded.values, expected.values)


def test_similarity_lambda_flags_exclusive(corpus_path, tmp_path, capsys):
    code = run(
        [
            "similarity",
            str(corpus_path),
            "--lambda",
            "0.1",
            "--lambda-quantile",
            "0.5",
            "--out",
            str(tmp_path / "m.csv"),
        ]
    )
    assert code == 1
    assert "not allowed with" in capsys.readouterr().err


def test_similarity_negative_lambda(corpus_path, tmp_path, capsys):
    code = run(
        ["similarity", str(corpus_path), "--lambda", "-1", "--out", str(tmp_path / "m.csv")]
    )
    assert code == 1
    assert "--lambda must be >= 0" in capsys.readouterr().err


@pytest.fixture()
def matrix_path(corpus_path, tmp_path):
    out = tmp_path / "matrix.csv"
    assert run(["similarity", str(corpus_path), "--lambda", "0.1", "--out", str(out)]) == 0
    return out


def test_embed_writes_sidecar_by_default(matrix_path, tmp_path, capsys):
    out = tmp_path / "emb.csv"
    assert run(["embed", str(matrix_path), "--out", str(out), "--dims", "2"]) == 0
    assert "k = 2" in capsys.readouterr().out
    sidecar = tmp_path / "emb.singular_values.txt"
    assert sidecar.exists()
    # Sidecar keeps the full spectrum so auto-k can be audited after the fact.
    values = matio.read_values(str(sidecar))
    assert len(values) == 7
    assert (np.diff(values) <= 0).all()
    ids, coords = matio.read_embedding(str(out))
    assert ids == tuple(f"p{i}" for i in range(1, 8))
    assert coords.shape == (7, 2)


def test_embed_classical_reports_dropped_mass(matrix_path, tmp_path, capsys):
    out = tmp_path / "emb.csv"
    code = run(
        ["embed", str(matrix_path), "--mode", "classical", "--out", str(out)]
    )
    assert code == 0
    assert "dropped_mass = " in capsys.readouterr().out


def test_embed_rejects_bad_dims(matrix_path, tmp_path, capsys):
    out = tmp_path / "emb.csv"
    assert run(["embed", str(matrix_path), "--dims", "zero", "--out", str(out)]) == 1
    assert "--dims must be" in capsys.readouterr().err
    assert run(["embed", str(matrix_path), "--dims", "0", "--out", str(out)]) == 1


@pytest.fixture()
def embedding_path(matrix_path, tmp_path):
    out = tmp_path / "emb.csv"
    assert run(["embed", str(matrix_path), "--out", str(out), "--dims", "2"]) == 0
    return out


def test_users_outputs(embedding_path, corpus_path, tmp_path, capsys):
    centroids = tmp_path / "centroids.csv"
    distances = tmp_path / "distances.csv"
    code = run(
        [
            "users",
            str(embedding_path),
            "--corpus",
            str(corpus_path),
            "--centroids",
            str(centroids),
            "--distances",
            str(distances),
        ]
    )
    assert code == 0
    assert capsys.readouterr().err == ""
    user_ids, coords = matio.read_embedding(str(centroids))
    assert user_ids == ("alice", "bob", "carol", "dave")
    assert coords.shape == (4, 2)
    ids, values = matio.read_labeled_matrix(str(distances))
    assert ids == user_ids
    assert values.shape == (4, 4)
    assert (values == values.T).all()
    assert (np.diagonal(values) == 0).all()


def test_users_reports_excluded_on_stderr(corpus_path, tmp_path, capsys):
    partial = tmp_path / "partial.csv"
    matio.write_embedding(("p1", "p3"), np.array([[0.0, 1.0], [2.0, 3.0]]), partial)
    code = run(
        [
            "users",
            str(partial),
            "--corpus",
            str(corpus_path),
            "--centroids",
            str(tmp_path / "c.csv"),
            "--distances",
            str(tmp_path / "d.csv"),
        ]
    )
    assert code == 0
    err = capsys.readouterr().err
    assert "excluded users with no embedded posts: bob, carol, dave" in err


@pytest.fixture()
def distance_csv(tmp_path):
    path = tmp_path / "dist.csv"
    values = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    matio.write_labeled_matrix(("a", "b", "c"), values, path)
    return path


def test_cluster_stdout_json(distance_csv, capsys):
    assert run(["cluster", str(distance_csv)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["leaves"] == ["a", "b", "c"]
    assert payload["linkage"] == "complete"


def test_cluster_files_and_cut(distance_csv, tmp_path, capsys):
    out_json = tmp_path / "dendro.json"
    out_newick = tmp_path / "dendro.newick"
    clusters_out = tmp_path / "clusters.csv"
    code = run(
        [
            "cluster",
            str(distance_csv),
            "--linkage",
            "single",
            "--out-json",
            str(out_json),
            "--out-newick",
            str(out_newick),
            "--cut",
            "2",
            "--clusters-out",
            str(clusters_out),
        ]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out_json.read_text(encoding="utf-8"))["linkage"] == "single"
    assert out_newick.read_text(encoding="utf-8").endswith(";\n")
    assert clusters_out.read_text(encoding="utf-8") == (
        "user_id,cluster\na,a\nb,a\nc,c\n"
    )


def test_cluster_cut_to_stdout(distance_csv, capsys):
    assert run(["cluster", str(distance_csv), "--cut", "2"]) == 0
    out = capsys.readouterr().out
    assert "a\ta" in out
    assert "c\tc" in out


def test_cluster_rejects_unknown_linkage(distance_csv, capsys):
    assert run(["cluster", str(distance_csv), "--linkage", "ward"]) == 1


def test_mst_outputs(distance_csv, tmp_path):
    dot = tmp_path / "tree.dot"
    edges = tmp_path / "edges.csv"
    code = run(
        ["mst", str(distance_csv), "--dot", str(dot), "--edges", str(edges)]
    )
    assert code == 0
    dot_text = dot.read_text(encoding="utf-8")
    assert dot_text.startswith("graph mst {")
    assert edges.read_text(encoding="utf-8") == (
        "user_a,user_b,weight\na,b,1\na,c,2\n"
    )


def test_mst_stdout_default(distance_csv, capsys):
    assert run(["mst", str(distance_csv)]) == 0
    assert capsys.readouterr().out.startswith("graph mst {")


def test_scatter_by_author(embedding_path, corpus_path, tmp_path):
    out = tmp_path / "plot.svg"
    code = run(
        ["scatter", str(embedding_path), "--corpus", str(corpus_path), "--out", str(out)]
    )
    assert code == 0
    svg = out.read_text(encoding="utf-8")
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    circles = sum(1 for _ in root.iter(ns + "circle"))
    # 7 posts plus 4 user centroids.
    assert circles == 11
    assert ">PC1</text>" in svg


def test_scatter_by_groups_csv(embedding_path, tmp_path):
    groups = tmp_path / "groups.csv"
    rows = ["post_id,group"]
    rows += [f"p{i},{'x' if i <= 4 else 'y'}" for i in range(1, 8)]
    groups.write_text("\n".join(rows) + "\n", encoding="utf-8")
    out = tmp_path / "plot.svg"
    code = run(
        ["scatter", str(embedding_path), "--groups", str(groups), "--out", str(out)]
    )
    assert code == 0
    ET.fromstring(out.read_text(encoding="utf-8"))


def test_scatter_missing_group(embedding_path, tmp_path, capsys):
    groups = tmp_path / "groups.csv"
    groups.write_text("post_id,group\np1,x\n", encoding="utf-8")
    code = run(
        [
            "scatter",
            str(embedding_path),
            "--groups",
            str(groups),
            "--out",
            str(tmp_path / "plot.svg"),
        ]
    )
    assert code == 1
    assert "no group for embedded ids" in capsys.readouterr().err


@pytest.mark.parametrize("axes", ["1", "1,1", "0,2", "2,9", "a,b"])
def test_scatter_axes_errors(embedding_path, corpus_path, tmp_path, capsys, axes):
    code = run(
        [
            "scatter",
            str(embedding_path),
            "--corpus",
            str(corpus_path),
            "--axes",
            axes,
            "--out",
            str(tmp_path / "plot.svg"),
        ]
    )
    assert code == 1


PIPELINE_FILES = (
    "lambda_report.json",
    "embedding.csv",
    "singular_values.txt",
    "user_centroids.csv",
    "user_distances.csv",
    "dendrogram.json",
    "dendrogram.newick",
    "mst.dot",
    "mst_edges.csv",
    "clusters.csv",
    "baseline_user_distances.csv",
    "baseline_dendrogram.json",
    "baseline_dendrogram.newick",
    "baseline_clusters.csv",
)


def run_pipeline(corpus_path, outdir):
    return run(
        [
            "pipeline",
            str(corpus_path),
            "--outdir",
            str(outdir),
            "--dims",
            "2",
            "--cut",
            "2",
            "--baseline",
        ]
    )


def test_pipeline_artifacts(corpus_path, tmp_path, capsys):
    outdir = tmp_path / "run1"
    assert run_pipeline(corpus_path, outdir) == 0
    out = capsys.readouterr().out
    assert out.startswith("posts=7 users=4 lambda=")
    assert "k=2" in out
    for name in PIPELINE_FILES:
        assert (outdir / name).exists(), name
    report = json.loads((outdir / "lambda_report.json").read_text(encoding="utf-8"))
    assert report["source"] == "quantile"
    clusters = (outdir / "clusters.csv").read_text(encoding="utf-8")
    assert clusters.startswith("user_id,cluster\n")
    assert len(clusters.splitlines()) == 5


def test_pipeline_byte_deterministic(corpus_path, tmp_path):
    first = tmp_path / "run1"
    second = tmp_path / "run2"
    assert run_pipeline(corpus_path, first) == 0
    assert run_pipeline(corpus_path, second) == 0
    for name in PIPELINE_FILES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


FORUM_CONFIG = {
    "n_users": 4,
    "n_communities": 2,
    "posts_per_user": [2, 3],
    "thread_length": [2, 4],
    "title_length": [2, 3],
    "vocab_size": 40,
    "cross_community_rate": 0.0,
    "seed": 5,
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_synth_forum(tmp_path, capsys):
    config = write_config(tmp_path, FORUM_CONFIG)
    out = tmp_path / "synth.jsonl"
    assert run(["synth", "forum", "--config", str(config), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("posts=")
    corpus = load_corpus(str(out))
    assert corpus.n_users == 4


def test_synth_seed_override(tmp_path):
    config = write_config(tmp_path, FORUM_CONFIG)
    outs = [tmp_path / f"s{i}.jsonl" for i in range(3)]
    assert run(["synth", "forum", "--config", str(config), "--seed", "11", "--out", str(outs[0])]) == 0
    assert run(["synth", "forum", "--config", str(config), "--seed", "11", "--out", str(outs[1])]) == 0
    assert run(["synth", "forum", "--config", str(config), "--seed", "12", "--out", str(outs[2])]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert outs[0].read_bytes() != outs[2].read_bytes()


def test_synth_sparse_forum(tmp_path):
    config = write_config(tmp_path, FORUM_CONFIG)
    out = tmp_path / "sparse.jsonl"
    assert run(["synth", "sparse-forum", "--config", str(config), "--out", str(out)]) == 0
    assert load_corpus(str(out)).n_users == 4


def test_synth_forum_rejects_gaussian_flags(tmp_path, capsys):
    config = write_config(tmp_path, FORUM_CONFIG)
    code = run(
        [
            "synth",
            "forum",
            "--config",
            str(config),
            "--out",
            str(tmp_path / "x.jsonl"),
            "--matrix-out",
            str(tmp_path / "m.csv"),
        ]
    )
    assert code == 1
    assert "only apply to 'gaussian'" in capsys.readouterr().err


def test_synth_gaussian_points_and_matrix(tmp_path, capsys):
    config = write_config(
        tmp_path,
        {
            "n_groups": 2,
            "points_per_group": 3,
            "means": [[0.0, 0.0], [5.0, 5.0]],
            "seed": 3,
        },
    )
    out = tmp_path / "points.csv"
    matrix_out = tmp_path / "matrix.csv"
    code = run(
        [
            "synth",
            "gaussian",
            "--config",
            str(config),
            "--out",
            str(out),
            "--matrix-out",
            str(matrix_out),
            "--lambda",
            "0.2",
        ]
    )
    assert code == 0
    assert "points=6 groups=2" in capsys.readouterr().out
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "point_id,x,y,group"
    assert len(lines) == 7
    assert lines[1].startswith("pt000,")
    assert lines[1].endswith(",g0")
    assert lines[6].startswith("pt005,")
    assert lines[6].endswith(",g1")
    ids, values = matio.read_labeled_matrix(str(matrix_out))
    assert ids == tuple(f"pt{i:03d}" for i in range(6))
    assert values.shape == (6, 6)
    assert (values == values.T).all()


def test_synth_unknown_config_key(tmp_path, capsys):
    config = write_config(tmp_path, {"n_grops": 3})
    code = run(["synth", "forum", "--config", str(config), "--out", str(tmp_path / "x")])
    assert code == 1
    assert "n_grops" in capsys.readouterr().err


def test_synth_invalid_config_json(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text("{not json", encoding="utf-8")
    code = run(["synth", "forum", "--config", str(config), "--out", str(tmp_path / "x")])
    assert code == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_internal_error_exit_2(corpus_path, monkeypatch, capsys):
    def boom(corpus):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "compute_stats", boom)
    assert run(["stats", str(corpus_path)]) == 2
    assert "internal error: RuntimeError: boom" in capsys.readouterr().err


def test_console_script(corpus_path):
    script = shutil.which("forumsim")
    if script is not None:
        argv = [script, "stats", str(corpus_path)]
    else:
        argv = [sys.executable, "-m", "forumsim.cli", "stats", str(corpus_path)]
    result = subprocess.run(argv, capture_output=True, text=True, timeout=120)
    assert result.returncode == 0, result.stderr
    assert "posts   7" in result.stdout
