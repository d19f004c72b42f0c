"""Reading and writing post logs, and the ABAB quarrel heuristic.

Log format: UTF-8 text, ``\\n`` line endings, one post per row, tab or comma
delimited. A header naming the columns ``thread_id``, ``post_index``,
``author_id`` and ``valence`` is required; other columns (timestamps, say)
are ignored. Lines starting with ``#`` before the header carry run metadata
and are skipped.
"""
from __future__ import annotations

import csv
import io
import re
from collections import Counter
from pathlib import Path

import numpy as np

from .errors import DataError, LogFormatError
from .records import ForumRecord, RecordSet, as_recordset

COLUMNS = ("thread_id", "post_index", "author_id", "valence")
DELIMITERS = {"tab": "\t", "comma": ",", "\t": "\t", ",": ","}
MIN_QUARREL_RUN = 4

_VALENCE = {"-1": -1, "0": 0, "1": 1}
_CANONICAL_INT = re.compile(r"^(0|-?[1-9][0-9]*)$")


def _delimiter(delimiter: str) -> str:
    try:
        return DELIMITERS[delimiter]
    except KeyError:
        raise DataError(f"unknown delimiter {delimiter!r}; use tab or comma") from None


def _keys(values: list[str]) -> np.ndarray:
    # integer keys only if every value prints back identically ("007" stays a string)
    if values and all(_CANONICAL_INT.match(v) for v in values):
        return np.array([int(v) for v in values], dtype=np.int64)
    return np.array(values, dtype=str)


def load_log(path, delimiter: str = "tab", source_rows: bool = False) -> RecordSet:
    """Parse a post log into records sorted by ``(thread_id, post_index)``.

    With ``source_rows`` the row of index 0 in each thread is taken to be the
    thread's source message and dropped.
    """
    path = Path(path)
    delim = _delimiter(delimiter)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such log file: {path}") from None
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 ({exc})") from None

    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delim)
    header = None
    lineno = 0
    threads, indices, authors, valences, lines = [], [], [], [], []
    for row in reader:
        lineno = reader.line_num
        if header is None:
            if not row or row[0].startswith("#"):
                continue
            header = [c.strip() for c in row]
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise LogFormatError(f"header lacks column(s) {', '.join(missing)}", lineno)
            cols = [header.index(c) for c in COLUMNS]
            width = len(header)
            continue
        if not row:
            continue
        if len(row) != width:
            raise LogFormatError(f"expected {width} fields, found {len(row)}", lineno)
        t, i, a, v = (row[c] for c in cols)
        if v not in _VALENCE:
            raise LogFormatError(f"valence {v!r} is not one of -1, 0, 1", lineno)
        if not i.isdigit():
            raise LogFormatError(f"post_index {i!r} is not a non-negative integer", lineno)
        if not t or not a:
            raise LogFormatError("empty thread_id or author_id", lineno)
        threads.append(t)
        indices.append(int(i))
        authors.append(a)
        valences.append(_VALENCE[v])
        lines.append(lineno)
    if header is None:
        raise DataError(f"{path}: empty log (no header)")
    if not threads:
        raise DataError(f"{path}: log has a header but no rows")

    rs = RecordSet(_keys(threads), np.array(indices), _keys(authors), np.array(valences))
    order = np.lexsort((rs.post_index, rs.thread_id))
    rs = rs[order]
    line_of = np.asarray(lines)[order]
    same_thread = rs.thread_id[1:] == rs.thread_id[:-1]
    dup = np.flatnonzero(same_thread & (rs.post_index[1:] == rs.post_index[:-1]))
    if dup.size:
        k = dup[0] + 1
        raise LogFormatError(
            f"duplicate post {rs.post_index[k]} in thread {rs.thread_id[k]} "
            f"(also on line {line_of[k - 1]})", int(line_of[k]))
    starts = np.r_[True, ~same_thread]
    first = rs.post_index[starts]
    if np.any(first > 1):
        k = np.flatnonzero(starts)[np.argmax(first > 1)]
        raise LogFormatError(f"thread {rs.thread_id[k]} starts at post_index {rs.post_index[k]}",
                             int(line_of[k]))
    gaps = np.flatnonzero(same_thread & (rs.post_index[1:] != rs.post_index[:-1] + 1))
    if gaps.size:
        k = gaps[0] + 1
        raise LogFormatError(f"thread {rs.thread_id[k]} skips to post_index {rs.post_index[k]}",
                             int(line_of[k]))
    if source_rows:
        rs = rs[rs.post_index != 0]
        if len(rs) == 0:
            raise DataError(f"{path}: no rows besides source messages")
    return rs


def write_log(records, path, delimiter: str = "tab", preamble: str | None = None) -> None:
    rs = as_recordset(records)
    d = _delimiter(delimiter)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if preamble:
            fh.write(preamble.rstrip("\n") + "\n")
        fh.write(d.join(COLUMNS) + "\n")
        rows = zip(rs.thread_id.tolist(), rs.post_index.tolist(),
                   rs.author_id.tolist(), rs.valence.tolist())
        fh.writelines(f"{t}{d}{i}{d}{a}{d}{v}\n" for t, i, a, v in rows)


def rows_per_thread(records) -> Counter:
    rs = as_recordset(records)
    return Counter(rs.thread_id.tolist())


def alternating_runs(authors, min_length: int = MIN_QUARREL_RUN) -> list[tuple[int, int]]:
    """Maximal ABAB... runs of length >= ``min_length``, scanned left to right.

    A run alternates strictly between two distinct authors. Runs are taken
    greedily and never share a post.
    """
    runs = []
    n = len(authors)
    i = 0
    while i < n - 1:
        if authors[i + 1] == authors[i]:
            i += 1
            continue
        j = i + 2
        while j < n and authors[j] == authors[j - 2]:
            j += 1
        if j - i >= min_length:
            runs.append((i, j - i))
            i = j
        else:
            i += 1
    return runs


def detect_quarrels(thread_rows, min_length: int = MIN_QUARREL_RUN) -> tuple[int, list[tuple[int, int]]]:
    """Quarrel posts of one thread whose rows are in post order."""
    authors = [r.author_id if isinstance(r, ForumRecord) else r for r in thread_rows]
    runs = alternating_runs(authors, min_length)
    return sum(m for _, m in runs), runs


def quarrel_post_counts(records, min_length: int = MIN_QUARREL_RUN) -> np.ndarray:
    """Quarrel posts per thread, in sorted thread order."""
    rs = as_recordset(records).sorted()
    if len(rs) == 0:
        return np.zeros(0, dtype=np.int64)
    bounds = np.flatnonzero(np.r_[True, rs.thread_id[1:] != rs.thread_id[:-1], True])
    authors = rs.author_id.tolist()
    return np.array([
        sum(m for _, m in alternating_runs(authors[s:e], min_length))
        for s, e in zip(bounds[:-1], bounds[1:])
    ], dtype=np.int64)


def quarrel_share(records, min_length: int = MIN_QUARREL_RUN) -> float:
    n = len(records)
    return float(quarrel_post_counts(records, min_length).sum() / n) if n else 0.0
