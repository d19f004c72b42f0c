"""Flat post log shared by the simulator and the empirical loader."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


class ForumRecord(NamedTuple):
    thread_id: int | str
    post_index: int
    author_id: int | str
    valence: int


def _id_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64, copy=False)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    return arr.astype(str)


@dataclass(frozen=True, eq=False)
class RecordSet:
    """Column store of :class:`ForumRecord` rows.

    Behaves as a read-only sequence of records; the columns are what the
    statistics code works on.
    """

    thread_id: np.ndarray
    post_index: np.ndarray
    author_id: np.ndarray
    valence: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "thread_id", _id_array(self.thread_id))
        object.__setattr__(self, "author_id", _id_array(self.author_id))
        object.__setattr__(self, "post_index", np.asarray(self.post_index, dtype=np.int64))
        object.__setattr__(self, "valence", np.asarray(self.valence, dtype=np.int8))
        n = len(self.thread_id)
        if not (len(self.post_index) == len(self.author_id) == len(self.valence) == n):
            raise ValueError("record columns differ in length")

    @classmethod
    def empty(cls) -> "RecordSet":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z)

    @classmethod
    def from_records(cls, records: Iterable[ForumRecord]) -> "RecordSet":
        rows = list(records)
        if not rows:
            return cls.empty()
        t, i, a, v = zip(*rows)
        return cls(np.array(t), np.array(i), np.array(a), np.array(v))

    @classmethod
    def concat(cls, parts: list["RecordSet"]) -> "RecordSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("thread_id", "post_index", "author_id", "valence")))

    def __len__(self) -> int:
        return len(self.thread_id)

    def __getitem__(self, k):
        if isinstance(k, (int, np.integer)):
            return ForumRecord(self.thread_id[k].item(), int(self.post_index[k]),
                               self.author_id[k].item(), int(self.valence[k]))
        return RecordSet(self.thread_id[k], self.post_index[k], self.author_id[k], self.valence[k])

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def sorted(self) -> "RecordSet":
        order = np.lexsort((self.post_index, self.thread_id))
        return self[order]

    def equals(self, other: "RecordSet") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("thread_id", "post_index", "author_id", "valence"))


def as_recordset(records) -> RecordSet:
    if isinstance(records, RecordSet):
        return records
    return RecordSet.from_records(records)
