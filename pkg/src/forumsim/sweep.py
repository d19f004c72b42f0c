"""Parameter sensitivity runs around a baseline parameter set."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import NamedTuple

import numpy as np

from . import stats
from .config import PARAM_FIELDS, parse_kv_lines, parse_param_value, params_from_mapping, read_config_text
from .engine import run_simulation
from .errors import FitError, ParamError
from .model import ModelParams

METRICS = ("ratio_pos", "ratio_neu", "ratio_neg", "mean_valence", "total_posts",
           "n_active_threads", "n_active_agents", "quarrel_fraction", "peak_L", "peak_e")
PEAK_MIN_THREADS = 10


class Peak(NamedTuple):
    L: float
    e: float


def peak_of_curve(x, y, n=None, min_count: int = PEAK_MIN_THREADS) -> Peak | None:
    """Characteristic extremum of a binned ``<e>_L(L)`` curve.

    The trend is a log-law fitted to the curve itself. The peak is the
    interior bin whose deviation from that trend is a local maximum in
    absolute value, the largest such one, ties going to smaller ``L``. A
    monotone curve has no peak. With ``n`` given, bins holding fewer than
    ``min_count`` threads are ignored.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if n is not None:
        keep = np.asarray(n) >= min_count
        x, y = x[keep], y[keep]
    if x.size < 3:
        raise FitError(f"peak search needs 3 bins, found {x.size}")
    step = np.diff(y)
    if np.all(step >= 0) or np.all(step <= 0):
        return None
    fit = stats.fit_log_law(x, y)
    dev = np.abs(y - stats.log_law(x, fit["A"], fit["B"]))
    best = None
    for i in range(1, x.size - 1):
        if dev[i] >= dev[i - 1] and dev[i] >= dev[i + 1] and (best is None or dev[i] > dev[best]):
            best = i
    return None if best is None else Peak(float(x[best]), float(y[best]))


@dataclass
class SweepPlan:
    baseline: ModelParams = field(default_factory=ModelParams)
    axes: list = field(default_factory=list)  # (parameter name, list of values)
    replicates: int = 5
    mode: str = "grid"  # "grid": every combination; "oat": one axis at a time

    def __post_init__(self):
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ParamError(f"replicates must be a positive integer, got {self.replicates!r}")
        if self.mode not in ("grid", "oat"):
            raise ParamError(f"mode must be 'grid' or 'oat', got {self.mode!r}")
        for name, values in self.axes:
            if name not in PARAM_FIELDS or name == "seed":
                raise ParamError(f"axis {name!r} is not a model parameter")
            if not values:
                raise ParamError(f"axis {name!r} has no values")
        for cell in self.cells():
            self.baseline.replace(**cell)  # validates every value up front

    def cells(self) -> list[dict]:
        if not self.axes:
            return [{}]
        if self.mode == "grid":
            names = [a for a, _ in self.axes]
            return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]
        cells = [{}]
        for name, values in self.axes:
            for v in values:
                if v != getattr(self.baseline, name):
                    cells.append({name: v})
        return cells

    def replicate_seed(self, r: int) -> int:
        return replicate_seed(self.baseline.seed, r)


def replicate_seed(base_seed: int, replicate: int) -> int:
    """Seed of replicate ``r``; shared by all cells so they differ only in parameters."""
    ss = np.random.SeedSequence([base_seed, replicate])
    return int(ss.generate_state(1, np.uint64)[0])


def parse_plan(text: str) -> SweepPlan:
    """Plan from ``key = value`` lines.

    ``replicates`` and ``mode`` control the sweep, ``axis <name> = v1, v2``
    declares an axis (mixes written ``a/b/c``), and any other key sets a
    baseline parameter.
    """
    baseline, axes, opts = {}, [], {}
    for key, value, lineno in parse_kv_lines(text):
        try:
            if key.startswith("axis "):
                name = key[5:].strip()
                axes.append((name, [parse_param_value(name, v) for v in value.split(",") if v.strip()]))
            elif key == "replicates":
                opts["replicates"] = int(value)
            elif key == "mode":
                opts["mode"] = value
            else:
                baseline[key] = value
        except (ParamError, ValueError) as exc:
            raise ParamError(f"line {lineno}: {exc}") from None
    return SweepPlan(params_from_mapping(baseline), axes, **opts)


def load_plan(path) -> SweepPlan:
    return parse_plan(read_config_text(path))


@dataclass
class ReplicateResult:
    seed: int
    values: dict
    curve_bins: np.ndarray
    curve_L: np.ndarray
    curve_e: np.ndarray
    curve_n: np.ndarray


def _curve_bins(L, e_L, bin_ratio):
    k = np.floor(np.log(L) / math.log(bin_ratio) + 1e-12).astype(np.int64)
    bins, inv = np.unique(k, return_inverse=True)
    n = np.bincount(inv)
    return bins, np.bincount(inv, weights=L) / n, np.bincount(inv, weights=e_L) / n, n


def run_replicate(params: ModelParams, bin_ratio: float = stats.DEFAULT_BIN_RATIO) -> ReplicateResult:
    out = run_simulation(params)
    values = {"total_posts": out.total_posts, "n_active_threads": out.n_active_threads,
              "n_active_agents": out.n_active_agents, "quarrel_fraction": out.quarrel_fraction,
              "capped_quarrels": out.capped_quarrels}
    if out.total_posts == 0:
        values.update(ratio_pos=math.nan, ratio_neu=math.nan, ratio_neg=math.nan,
                      mean_valence=math.nan, peak_L=math.nan, peak_e=math.nan)
        empty = np.zeros(0)
        return ReplicateResult(params.seed, values, empty.astype(np.int64), empty, empty, empty.astype(np.int64))
    m = stats.compute_metrics(out.records)
    pos, neu, neg = m.ratios
    values.update(ratio_pos=pos, ratio_neu=neu, ratio_neg=neg, mean_valence=m.mean_valence)
    bins, x, y, n = _curve_bins(m.L, m.e_L, bin_ratio)
    try:
        peak = peak_of_curve(x, y, n)
    except FitError:
        peak = None
    values["peak_L"], values["peak_e"] = (peak.L, peak.e) if peak else (math.nan, math.nan)
    return ReplicateResult(params.seed, values, bins, x, y, n)


@dataclass
class CellReport:
    changes: dict
    params: ModelParams
    replicates: list
    mean: dict
    sd: dict
    n_peaks: int
    curve: dict  # L, e_L mean and sd over replicates, replicate count per bin


@dataclass
class SweepReport:
    plan: SweepPlan
    cells: list
    bin_ratio: float
    peak_definition: str = ("extremal interior deviation from a log-law fitted to the binned "
                            f"<e>_L(L) curve; bins with < {PEAK_MIN_THREADS} threads ignored")

    def cell(self, **changes) -> CellReport:
        for c in self.cells:
            if c.changes == changes:
                return c
        raise KeyError(changes)


def _aggregate(changes, params, reps) -> CellReport:
    mean, sd = {}, {}
    for key in METRICS:
        v = np.array([r.values[key] for r in reps], dtype=float)
        v = v[~np.isnan(v)]
        mean[key] = float(v.mean()) if v.size else math.nan
        sd[key] = float(v.std(ddof=1)) if v.size > 1 else (0.0 if v.size else math.nan)
    n_peaks = sum(not math.isnan(r.values["peak_L"]) for r in reps)
    bins = np.unique(np.concatenate([r.curve_bins for r in reps])) if reps else np.zeros(0, np.int64)
    Ls, es = np.full((len(reps), bins.size), np.nan), np.full((len(reps), bins.size), np.nan)
    for i, r in enumerate(reps):
        idx = np.searchsorted(bins, r.curve_bins)
        Ls[i, idx], es[i, idx] = r.curve_L, r.curve_e
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # bins absent from every replicate
        curve = {
            "L": np.nanmean(Ls, axis=0),
            "e_L": np.nanmean(es, axis=0),
            "e_L_sd": np.nanstd(es, axis=0, ddof=1) if len(reps) > 1 else np.zeros(bins.size),
            "replicates": np.sum(~np.isnan(es), axis=0),
        }
    return CellReport(changes, params, reps, mean, sd, n_peaks, curve)


def _task(args):
    params, bin_ratio = args
    return run_replicate(params, bin_ratio)


def run_sweep(plan: SweepPlan, workers: int = 1, bin_ratio: float = stats.DEFAULT_BIN_RATIO,
              progress=None) -> SweepReport:
    """One full simulation per (cell, replicate); cells share replicate seeds."""
    cells = plan.cells()
    seeds = [plan.replicate_seed(r) for r in range(plan.replicates)]
    tasks = [(plan.baseline.replace(**c, seed=s), bin_ratio) for c in cells for s in seeds]
    if workers > 1 and len(tasks) > 1:
        with get_context("fork").Pool(workers) as pool:
            results = []
            for res in pool.imap(_task, tasks):
                results.append(res)
                if progress:
                    progress(len(results), len(tasks))
    else:
        results = []
        for t in tasks:
            results.append(_task(t))
            if progress:
                progress(len(results), len(tasks))
    r = plan.replicates
    reports = [_aggregate(c, plan.baseline.replace(**c), results[i * r:(i + 1) * r])
               for i, c in enumerate(cells)]
    return SweepReport(plan, reports, bin_ratio)
