"""Forum corpus loading, validation, indexing, and summary statistics.

A corpus is an immutable snapshot of posts, threads, and users with all
referential links checked at construction time. Loaders accept JSONL (one
record per line, post and thread records mixed) or a pair of CSV files
(posts.csv + threads.csv). Iteration order is always sorted by ID so that
downstream artifacts are deterministic.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .exceptions import InputError

__all__ = [
    "Post",
    "Thread",
    "User",
    "CorpusStats",
    "Corpus",
    "build_corpus",
    "load_corpus",
    "load_jsonl",
    "load_csv",
    "write_jsonl",
    "filter_users_by_post_count",
    "compute_stats",
    "nearest_rank_quantile",
    "five_number_summary",
]


@dataclass(frozen=True)
class Post:
    """One forum post; ``position`` is its 0-based ordinal within the thread."""

    post_id: str
    thread_id: str
    user_id: str
    body: str
    position: int


@dataclass(frozen=True)
class Thread:
    thread_id: str
    title: str
    post_ids: tuple[str, ...]


@dataclass(frozen=True)
class User:
    user_id: str
    post_ids: tuple[str, ...]


@dataclass(frozen=True)
class CorpusStats:
    """Corpus summary; each quantile field is (min, q1, median, q3, max)."""

    n_posts: int
    n_threads: int
    n_users: int
    post_word_count_quantiles: tuple[int, int, int, int, int]
    posts_per_user_quantiles: tuple[int, int, int, int, int]
    posts_per_thread_quantiles: tuple[int, int, int, int, int]


class Corpus:
    """Immutable, fully cross-linked collection of posts, threads, and users.

    Safe for concurrent reads; construct via :func:`build_corpus` or a loader.
    """

    def __init__(
        self,
        posts: Mapping[str, Post],
        threads: Mapping[str, Thread],
        users: Mapping[str, User],
    ) -> None:
        self._posts = dict(posts)
        self._threads = dict(threads)
        self._users = dict(users)
        self._post_ids = tuple(sorted(self._posts))
        self._thread_ids = tuple(sorted(self._threads))
        self._user_ids = tuple(sorted(self._users))

    @property
    def n_posts(self) -> int:
        return len(self._posts)

    @property
    def n_threads(self) -> int:
        return len(self._threads)

    @property
    def n_users(self) -> int:
        return len(self._users)

    @property
    def post_ids(self) -> tuple[str, ...]:
        return self._post_ids

    @property
    def thread_ids(self) -> tuple[str, ...]:
        return self._thread_ids

    @property
    def user_ids(self) -> tuple[str, ...]:
        return self._user_ids

    def post(self, post_id: str) -> Post:
        try:
            return self._posts[post_id]
        except KeyError:
            raise InputError(f"unknown post_id {post_id!r}") from None

    def thread(self, thread_id: str) -> Thread:
        try:
            return self._threads[thread_id]
        except KeyError:
            raise InputError(f"unknown thread_id {thread_id!r}") from None

    def user(self, user_id: str) -> User:
        try:
            return self._users[user_id]
        except KeyError:
            raise InputError(f"unknown user_id {user_id!r}") from None

    def posts(self) -> Iterator[Post]:
        """All posts, sorted by post_id."""
        for pid in self._post_ids:
            yield self._posts[pid]

    def threads(self) -> Iterator[Thread]:
        for tid in self._thread_ids:
            yield self._threads[tid]

    def users(self) -> Iterator[User]:
        for uid in self._user_ids:
            yield self._users[uid]

    def title_of(self, thread_id: str) -> str:
        return self.thread(thread_id).title

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self._posts == other._posts
            and self._threads == other._threads
            and self._users == other._users
        )

    def __repr__(self) -> str:
        return (
            f"Corpus(n_posts={self.n_posts}, n_threads={self.n_threads}, "
            f"n_users={self.n_users})"
        )


def build_corpus(
    post_records: Iterable[tuple[str, str, str, str]],
    thread_titles: Mapping[str, str],
) -> Corpus:
    """Assemble and validate a Corpus from raw records.

    ``post_records`` yields (post_id, thread_id, user_id, body) in stream
    order; per-thread positions follow that order. ``thread_titles`` maps
    every referenced thread_id to its title. Threads with a title record but
    no posts are dropped (a thread must contain at least one post).
    """
    posts: dict[str, Post] = {}
    thread_posts: dict[str, list[str]] = {}
    user_posts: dict[str, list[str]] = {}
    for post_id, thread_id, user_id, body in post_records:
        if post_id in posts:
            raise InputError(f"duplicate post_id {post_id!r}")
        if thread_id not in thread_titles:
            raise InputError(
                f"post {post_id!r} references unknown thread_id {thread_id!r}"
            )
        position = len(thread_posts.setdefault(thread_id, []))
        posts[post_id] = Post(post_id, thread_id, user_id, body, position)
        thread_posts[thread_id].append(post_id)
        user_posts.setdefault(user_id, []).append(post_id)

    threads = {
        tid: Thread(tid, thread_titles[tid], tuple(pids))
        for tid, pids in thread_posts.items()
    }
    users = {uid: User(uid, tuple(sorted(pids))) for uid, pids in user_posts.items()}
    return Corpus(posts, threads, users)


def _require_str(record: dict, key: str, lineno: int) -> str:
    if key not in record:
        raise InputError(f"line {lineno}: missing field {key!r}")
    value = record[key]
    if not isinstance(value, str):
        raise InputError(f"line {lineno}: field {key!r} must be a string")
    return value


def load_jsonl(source) -> Corpus:
    """Load a corpus from JSONL: post and thread records in any order.

    ``source`` is a path or a text file object. Post records look like
    {"type": "post", "post_id": ..., "thread_id": ..., "user_id": ...,
    "body": ...}; thread records {"type": "thread", "thread_id": ...,
    "title": ...}.
    """
    if hasattr(source, "read"):
        return _load_jsonl_stream(source)
    with open(source, "r", encoding="utf-8", newline="") as fh:
        return _load_jsonl_stream(fh)


def _load_jsonl_stream(fh) -> Corpus:
    post_records: list[tuple[str, str, str, str]] = []
    titles: dict[str, str] = {}
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"line {lineno}: malformed JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise InputError(f"line {lineno}: record must be a JSON object")
        kind = record.get("type")
        if kind == "post":
            post_records.append(
                (
                    _require_str(record, "post_id", lineno),
                    _require_str(record, "thread_id", lineno),
                    _require_str(record, "user_id", lineno),
                    _require_str(record, "body", lineno),
                )
            )
        elif kind == "thread":
            tid = _require_str(record, "thread_id", lineno)
            if tid in titles:
                raise InputError(f"line {lineno}: duplicate thread record {tid!r}")
            titles[tid] = _require_str(record, "title", lineno)
        else:
            raise InputError(
                f"line {lineno}: unknown record type {kind!r} "
                "(expected 'post' or 'thread')"
            )
    return build_corpus(post_records, titles)


def load_csv(posts_path, threads_path) -> Corpus:
    """Load a corpus from posts.csv + threads.csv (RFC-4180, UTF-8).

    posts.csv columns: post_id,thread_id,user_id,body.
    threads.csv columns: thread_id,title.
    """
    titles: dict[str, str] = {}
    with open(threads_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None:
            missing = {"thread_id", "title"} - set(reader.fieldnames)
            if missing:
                raise InputError(
                    f"threads CSV missing columns: {', '.join(sorted(missing))}"
                )
            for record in reader:
                lineno = reader.line_num
                tid = record.get("thread_id")
                title = record.get("title")
                if tid is None or title is None:
                    raise InputError(f"line {lineno}: short CSV row in threads file")
                if tid in titles:
                    raise InputError(f"line {lineno}: duplicate thread record {tid!r}")
                titles[tid] = title

    post_records: list[tuple[str, str, str, str]] = []
    with open(posts_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None:
            missing = {"post_id", "thread_id", "user_id", "body"} - set(
                reader.fieldnames
            )
            if missing:
                raise InputError(
                    f"posts CSV missing columns: {', '.join(sorted(missing))}"
                )
            for record in reader:
                lineno = reader.line_num
                fields = []
                for key in ("post_id", "thread_id", "user_id", "body"):
                    value = record.get(key)
                    if value is None:
                        raise InputError(f"line {lineno}: short CSV row in posts file")
                    fields.append(value)
                post_records.append(tuple(fields))
    return build_corpus(post_records, titles)


def load_corpus(source, format: str = "jsonl", threads_path=None) -> Corpus:
    """Load a corpus from disk; ``format`` is 'jsonl' or 'csv'.

    For CSV, ``source`` is the posts file and ``threads_path`` the threads
    file (required).
    """
    if format == "jsonl":
        return load_jsonl(source)
    if format == "csv":
        if threads_path is None:
            raise InputError("csv format requires a threads file")
        return load_csv(source, threads_path)
    raise InputError(f"unknown corpus format {format!r}")


def write_jsonl(corpus: Corpus, dest) -> None:
    """Write the normalized JSONL form: threads sorted by ID, then posts
    sorted by (thread_id, position). Round-trips byte-identically through
    load_jsonl followed by write_jsonl.
    """
    if hasattr(dest, "write"):
        _write_jsonl_stream(corpus, dest)
        return
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        _write_jsonl_stream(corpus, fh)


def _write_jsonl_stream(corpus: Corpus, fh) -> None:
    for thread in corpus.threads():
        record = {
            "type": "thread",
            "thread_id": thread.thread_id,
            "title": thread.title,
        }
        fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
        fh.write("\n")
    for thread in corpus.threads():
        for pid in thread.post_ids:
            post = corpus.post(pid)
            record = {
                "type": "post",
                "post_id": post.post_id,
                "thread_id": post.thread_id,
                "user_id": post.user_id,
                "body": post.body,
            }
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def filter_users_by_post_count(
    corpus: Corpus, min_posts: int, max_posts: int | None = None
) -> Corpus:
    """Keep exactly the posts of users whose post count in the *input* corpus
    lies in the inclusive band [min_posts, max_posts].

    ``max_posts=None`` means no upper bound. Threads left with no posts are
    dropped; surviving posts are renumbered compactly within each thread,
    preserving their original relative order.
    """
    if min_posts < 0:
        raise InputError("min_posts must be >= 0")
    if max_posts is not None and min_posts > max_posts:
        raise InputError(
            f"min_posts ({min_posts}) must not exceed max_posts ({max_posts})"
        )
    upper = math.inf if max_posts is None else max_posts
    keep_users = {
        user.user_id
        for user in corpus.users()
        if min_posts <= len(user.post_ids) <= upper
    }
    records = []
    for thread in corpus.threads():
        for pid in thread.post_ids:
            post = corpus.post(pid)
            if post.user_id in keep_users:
                records.append((post.post_id, post.thread_id, post.user_id, post.body))
    titles = {t.thread_id: t.title for t in corpus.threads()}
    return build_corpus(records, titles)


def nearest_rank_quantile(sorted_values: Sequence, q: float):
    """Nearest-rank quantile: the ceil(q*n)-th smallest value (1-indexed).

    ``sorted_values`` must be non-empty and ascending; 0 < q <= 1.
    """
    n = len(sorted_values)
    if n == 0:
        raise InputError("quantile of empty sequence")
    if not 0.0 < q <= 1.0:
        raise InputError(f"quantile must be in (0, 1], got {q}")
    rank = math.ceil(q * n)
    return sorted_values[rank - 1]


def five_number_summary(values: Sequence) -> tuple:
    """(min, q1, median, q3, max) via nearest-rank; zeros for empty input."""
    if not values:
        return (0, 0, 0, 0, 0)
    xs = sorted(values)
    return (
        xs[0],
        nearest_rank_quantile(xs, 0.25),
        nearest_rank_quantile(xs, 0.5),
        nearest_rank_quantile(xs, 0.75),
        xs[-1],
    )


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Summary statistics; word counts use raw whitespace tokenization of the
    post bodies (stopwords included, no HTML stripping)."""
    word_counts = [len(post.body.split()) for post in corpus.posts()]
    per_user = [len(user.post_ids) for user in corpus.users()]
    per_thread = [len(thread.post_ids) for thread in corpus.threads()]
    return CorpusStats(
        n_posts=corpus.n_posts,
        n_threads=corpus.n_threads,
        n_users=corpus.n_users,
        post_word_count_quantiles=five_number_summary(word_counts),
        posts_per_user_quantiles=five_number_summary(per_user),
        posts_per_thread_quantiles=five_number_summary(per_thread),
    )
