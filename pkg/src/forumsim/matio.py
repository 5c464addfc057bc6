"""Deterministic CSV I/O for labeled matrices, embeddings, and value lists.

Floats are written with 17 significant digits so float64 values round-trip
exactly; files always use '\\n' line endings so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
from typing import Sequence

import numpy as np

from .exceptions import InputError

__all__ = [
    "format_float",
    "write_labeled_matrix",
    "read_labeled_matrix",
    "write_embedding",
    "read_embedding",
    "write_values",
    "read_values",
]


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def _open_for_write(dest):
    if hasattr(dest, "write"):
        return dest, False
    return open(dest, "w", encoding="utf-8", newline=""), True


def _open_for_read(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def write_labeled_matrix(ids: Sequence[str], values: np.ndarray, dest) -> None:
    """Square matrix CSV: first row and first column carry the labels."""
    values = np.asarray(values)
    n = len(ids)
    if values.shape != (n, n):
        raise InputError(f"matrix shape {values.shape} does not match {n} labels")
    fh, owned = _open_for_write(dest)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(ids))
        for i, row_id in enumerate(ids):
            writer.writerow([row_id] + [format_float(v) for v in values[i]])
    finally:
        if owned:
            fh.close()


def read_labeled_matrix(source) -> tuple[tuple[str, ...], np.ndarray]:
    fh, owned = _open_for_read(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError("empty matrix file") from None
        ids = tuple(header[1:])
        n = len(ids)
        values = np.zeros((n, n), dtype=np.float64)
        count = 0
        for row in reader:
            if not row:
                continue
            if count >= n:
                raise InputError("matrix file has more rows than labels")
            if row[0] != ids[count]:
                raise InputError(
                    f"matrix row label {row[0]!r} does not match column "
                    f"label {ids[count]!r}"
                )
            if len(row) != n + 1:
                raise InputError(f"matrix row {row[0]!r} has {len(row) - 1} values")
            try:
                values[count] = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise InputError(f"matrix row {row[0]!r}: {exc}") from None
            count += 1
        if count != n:
            raise InputError(f"matrix file has {count} rows for {n} labels")
        return ids, values
    finally:
        if owned:
            fh.close()


def write_embedding(
    ids: Sequence[str], coords: np.ndarray, dest, id_field: str = "post_id"
) -> None:
    """Coordinate CSV: header ``<id_field>,coord_1..coord_k``."""
    coords = np.atleast_2d(np.asarray(coords))
    if coords.shape[0] != len(ids):
        raise InputError(
            f"coordinate rows ({coords.shape[0]}) do not match {len(ids)} ids"
        )
    k = coords.shape[1]
    fh, owned = _open_for_write(dest)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_field] + [f"coord_{j + 1}" for j in range(k)])
        for i, row_id in enumerate(ids):
            writer.writerow([row_id] + [format_float(v) for v in coords[i]])
    finally:
        if owned:
            fh.close()


def read_embedding(source) -> tuple[tuple[str, ...], np.ndarray]:
    fh, owned = _open_for_read(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError("empty embedding file") from None
        k = len(header) - 1
        if k < 0:
            raise InputError("embedding file has no columns")
        ids: list[str] = []
        rows: list[list[float]] = []
        for row in reader:
            if not row:
                continue
            if len(row) != k + 1:
                raise InputError(f"embedding row {row[0]!r} has {len(row) - 1} values")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise InputError(f"embedding row {row[0]!r}: {exc}") from None
        coords = np.asarray(rows, dtype=np.float64).reshape(len(ids), k)
        return tuple(ids), coords
    finally:
        if owned:
            fh.close()


def write_values(values: Sequence[float], dest) -> None:
    """One value per line, 17 significant digits."""
    fh, owned = _open_for_write(dest)
    try:
        for v in values:
            fh.write(format_float(v))
            fh.write("\n")
    finally:
        if owned:
            fh.close()


def read_values(source) -> np.ndarray:
    fh, owned = _open_for_read(source)
    try:
        vals = [float(line.strip()) for line in fh if line.strip()]
        return np.asarray(vals, dtype=np.float64)
    finally:
        if owned:
            fh.close()
