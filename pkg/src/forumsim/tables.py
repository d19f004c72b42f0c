"""Delimiter-separated output tables with a run-reference first line."""
from __future__ import annotations

import math

import numpy as np

from .errors import DataError


def provenance_line(run_id: str, seed) -> str:
    return f"# run_id={run_id} seed={seed}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_table(path, columns, rows, run_id: str, seed, delimiter: str = "\t") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(provenance_line(run_id, seed) + "\n")
        fh.write(delimiter.join(columns) + "\n")
        for row in rows:
            fh.write(delimiter.join(_fmt(v) for v in row) + "\n")


def write_columns(path, columns: dict, run_id: str, seed) -> None:
    names = list(columns)
    cols = [np.asarray(columns[n]).tolist() for n in names]
    write_table(path, names, zip(*cols), run_id, seed)


def write_kv(path, items, run_id: str, seed) -> None:
    write_table(path, ("name", "value"), list(items), run_id, seed)


def read_table(path, delimiter: str = "\t") -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a table written by :func:`write_table`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty table")
    header = lines[0].split(delimiter)
    try:
        data = np.array([[float(v) for v in ln.split(delimiter)] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric table entry ({exc})") from None
    return header, data.reshape(-1, len(header))


def read_kv(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    return dict(ln.split("\t", 1) for ln in lines[1:])
