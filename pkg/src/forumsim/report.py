"""Standard table set computed from a post log.

Simulated and ingested logs both go through :func:`build_tables`, so their
outputs can be compared file by file.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import stats
from .errors import FitError
from .ingest import quarrel_share

log = logging.getLogger(__name__)

# default fit ranges (x_min, x_max); None is unbounded
DEFAULT_FIT_RANGES = {
    "a": (None, None),
    "d": (None, None),
    "n": (None, None),
    "L": (stats.TAIL_MIN, None),
    "U": (stats.TAIL_MIN, None),
    "u": (None, None),
    "e_d": (None, None),
    "e_L": (None, None),
}

# metrics attribute -> name of its fitted exponent
HISTOGRAMS = {
    "a": "beta",
    "d": "alpha",
    "n": "tau",
    "L": "eta_L",
    "U": "eta_U",
}


@dataclass
class TableSet:
    tables: dict = field(default_factory=dict)  # file stem -> {column: values}
    fits: list = field(default_factory=list)  # (name, value)
    summary: list = field(default_factory=list)


def _fit_rows(prefix: str, fit: stats.FitResult | None) -> list:
    if fit is None:
        return [(f"{prefix}.status", "insufficient_data")]
    return [(f"{prefix}.{k}", v) for k, v in fit.rows()]


def _try(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except FitError as exc:
        log.warning("fit skipped: %s", exc)
        return None


def build_tables(
    metrics: stats.ForumMetrics,
    bin_ratio: float = stats.DEFAULT_BIN_RATIO,
    fit_ranges: dict | None = None,
    shuffle_seed: int = 0,
    records=None,
) -> TableSet:
    ranges = {**DEFAULT_FIT_RANGES, **(fit_ranges or {})}
    out = TableSet()

    summary = list(metrics.summary().items())
    if records is not None:
        summary.append(("quarrel_share_abab", quarrel_share(records)))
    out.summary = summary

    for name, symbol in HISTOGRAMS.items():
        values = getattr(metrics, name)
        h = stats.log_binned_histogram(values, bin_ratio)
        out.tables[f"hist_{name}"] = {name: h.centers, "density": h.density,
                                      "count": h.counts, "width": h.widths}
        raw = stats.raw_histogram(values)
        out.tables[f"hist_{name}_raw"] = {name: raw.centers, "frequency": raw.density,
                                          "count": raw.counts}
        out.fits += _fit_rows(symbol, _try(stats.fit_power_law, h, ranges[name]))
        if name == "a":
            out.fits += _fit_rows("beta_raw", _try(stats.fit_power_law, raw, ranges[name]))

    L, u = stats.u_curve(metrics, bin_ratio)
    out.tables["u_of_L"] = {"L": L, "u": u}
    fit_u = _try(stats.fit_u_of_L, L, u, ranges["u"])
    out.fits += _fit_rows("u_of_L", fit_u)

    for key, sums, counts in (
        ("e_a", metrics.user_valence_sum, metrics.a),
        ("e_L", metrics.thread_valence_sum, metrics.L),
        ("e_d", metrics.pair_valence_sum, metrics.d),
    ):
        centers, p = stats.valence_distribution(sums, counts)
        out.tables[f"{key}_dist"] = {key: centers, "p": p}

    x, y, n = stats.binned_mean(metrics.a, metrics.e_a, bin_ratio)
    out.tables["e_a_vs_a"] = {"a": x, "e_a": y, "n": n}
    x, y, n = stats.binned_mean(metrics.d, metrics.e_d, bin_ratio)
    out.tables["e_d_vs_d"] = {"d": x, "e_d": y, "n": n}
    b = fit_u["b"] if fit_u is not None else None
    out.fits += _fit_rows("e_d", None if b is None else _try(stats.fit_shifted_log, x, y, b, ranges["e_d"]))
    x, y, n = stats.binned_mean(metrics.L, metrics.e_L, bin_ratio)
    out.tables["e_L_vs_L"] = {"L": x, "e_L": y, "n": n}
    out.fits += _fit_rows("e_L", _try(stats.fit_log_law, x, y, ranges["e_L"]))

    if metrics.a.size >= 2:
        ae = stats.activity_vs_emotion(metrics, shuffle_seed)
        out.tables["activity_vs_emotion"] = {"e_a": ae.centers, "mean_a": ae.original, "n_users": ae.n_original}
        out.tables["activity_vs_emotion_shuffled"] = {"e_a": ae.centers, "mean_a": ae.shuffled,
                                                      "n_users": ae.n_shuffled}
    return out


def parse_range(text: str) -> tuple[float | None, float | None]:
    """``"lo:hi"`` with either side optional."""
    if ":" not in text:
        raise ValueError(f"fit range {text!r} is not of the form lo:hi")
    lo, hi = text.split(":", 1)
    rng = (float(lo) if lo.strip() else None, float(hi) if hi.strip() else None)
    if rng[0] is not None and rng[1] is not None and not rng[0] <= rng[1]:
        raise ValueError(f"empty fit range {text!r}")
    if any(v is not None and not math.isfinite(v) for v in rng):
        raise ValueError(f"non-finite fit range {text!r}")
    return rng

