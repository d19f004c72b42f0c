"""Activity and emotion observables of a post log, and the fitted laws.

Everything here works on a :class:`~forumsim.records.RecordSet` and is
indifferent to row order. Users and threads are identified by their keys
only; every row counts as one user post.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import DataError, EmptyMetricsError, FitError
from .records import RecordSet, as_recordset

DEFAULT_BIN_RATIO = 1.5
TAIL_MIN = 20  # thread-length and unique-user tails are fitted above this
EMOTION_BINS = 20  # width 0.1 over [-1, 1]


@dataclass
class ForumMetrics:
    user_ids: np.ndarray
    thread_ids: np.ndarray
    a: np.ndarray  # posts per user
    n: np.ndarray  # distinct threads per user
    user_valence_sum: np.ndarray
    L: np.ndarray  # posts per thread
    U: np.ndarray  # distinct authors per thread
    thread_valence_sum: np.ndarray
    pair_user: np.ndarray  # user index of each (user, thread) pair
    pair_thread: np.ndarray
    d: np.ndarray  # posts of the user in the thread
    pair_valence_sum: np.ndarray
    post_user: np.ndarray  # per-post user index, kept for the shuffle baseline
    post_valence: np.ndarray
    n_pos: int
    n_neu: int
    n_neg: int

    @property
    def total_posts(self) -> int:
        return self.n_pos + self.n_neu + self.n_neg

    @property
    def e_a(self) -> np.ndarray:
        return self.user_valence_sum / self.a

    @property
    def e_L(self) -> np.ndarray:
        return self.thread_valence_sum / self.L

    @property
    def e_d(self) -> np.ndarray:
        return self.pair_valence_sum / self.d

    @property
    def u(self) -> np.ndarray:
        return self.U / self.L

    @property
    def mean_valence(self) -> float:
        return (self.n_pos - self.n_neg) / self.total_posts

    @property
    def ratios(self) -> tuple[float, float, float]:
        t = self.total_posts
        return self.n_pos / t, self.n_neu / t, self.n_neg / t

    def summary(self) -> dict:
        pos, neu, neg = self.ratios
        return {
            "total_posts": self.total_posts,
            "n_users": int(self.a.size),
            "n_threads": int(self.L.size),
            "a_max": int(self.a.max()),
            "a_mean": float(self.a.mean()),
            "a_median": float(np.median(self.a)),
            "d_max": int(self.d.max()),
            "d_mean": float(self.d.mean()),
            "n_max": int(self.n.max()),
            "L_max": int(self.L.max()),
            "L_mean": float(self.L.mean()),
            "U_max": int(self.U.max()),
            "mean_valence": self.mean_valence,
            "ratio_pos": pos,
            "ratio_neu": neu,
            "ratio_neg": neg,
        }


def compute_metrics(records) -> ForumMetrics:
    rs = as_recordset(records)
    if len(rs) == 0:
        raise EmptyMetricsError("no posts to analyse")
    v = rs.valence.astype(np.int64)
    bad = np.flatnonzero((v < -1) | (v > 1))
    if bad.size:
        raise DataError(f"row {int(bad[0])}: valence {int(v[bad[0]])} outside {{-1, 0, 1}}")

    user_ids, ui = np.unique(rs.author_id, return_inverse=True)
    thread_ids, ti = np.unique(rs.thread_id, return_inverse=True)
    nu, nt = user_ids.size, thread_ids.size
    pair_key = ui.astype(np.int64) * nt + ti
    pairs, pi = np.unique(pair_key, return_inverse=True)
    pair_user = (pairs // nt).astype(np.int64)
    pair_thread = (pairs % nt).astype(np.int64)

    def count(idx, size, weights=None):
        if weights is None:
            return np.bincount(idx, minlength=size).astype(np.int64)
        return np.rint(np.bincount(idx, weights=weights, minlength=size)).astype(np.int64)

    return ForumMetrics(
        user_ids=user_ids,
        thread_ids=thread_ids,
        a=count(ui, nu),
        n=count(pair_user, nu),
        user_valence_sum=count(ui, nu, v),
        L=count(ti, nt),
        U=count(pair_thread, nt),
        thread_valence_sum=count(ti, nt, v),
        pair_user=pair_user,
        pair_thread=pair_thread,
        d=count(pi, pairs.size),
        pair_valence_sum=count(pi, pairs.size, v),
        post_user=ui.astype(np.int64),
        post_valence=v.astype(np.int8),
        n_pos=int(np.count_nonzero(v == 1)),
        n_neu=int(np.count_nonzero(v == 0)),
        n_neg=int(np.count_nonzero(v == -1)),
    )


# --------------------------------------------------------------------------- #
# histograms

@dataclass
class HistogramSpec:
    """Normalized histogram of positive integers.

    For ``kind == "log"`` bin ``k`` covers ``[r**k, r**(k+1))``; its density
    is the count divided by the number of samples and by the number of
    integers the bin can hold. ``centers`` are geometric means of the first
    and last integer of each bin.
    """

    kind: str
    bin_ratio: float | None
    edges: np.ndarray
    centers: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    widths: np.ndarray  # integers per bin

    @property
    def entries(self) -> list[tuple[float, float]]:
        return list(zip(self.centers.tolist(), self.density.tolist()))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _positive_ints(values) -> np.ndarray:
    x = np.asarray(values)
    if x.size == 0:
        raise DataError("histogram of an empty sample")
    if not np.all(np.floor(x) == x) or x.min() < 1:
        raise DataError("histogram values must be integers >= 1")
    return x if x.dtype.kind in "iu" else x.astype(np.int64)


def log_binned_histogram(values, bin_ratio: float = DEFAULT_BIN_RATIO) -> HistogramSpec:
    if not bin_ratio > 1:
        raise DataError(f"bin_ratio must exceed 1, got {bin_ratio}")
    x = _positive_ints(values)
    xmax = int(x.max())
    n_edges = int(math.floor(math.log(xmax) / math.log(bin_ratio))) + 2
    edges = bin_ratio ** np.arange(n_edges, dtype=float)
    while edges[-1] <= xmax:
        edges = np.append(edges, edges[-1] * bin_ratio)
    # first and one-past-last integer of each bin, as floats: heavy tails
    # can exceed the int64 range
    lo = np.ceil(edges[:-1])
    hi = np.ceil(edges[1:])
    keep = hi > lo
    counts = np.diff(np.searchsorted(np.sort(x.astype(float)), np.r_[lo[0], hi], side="left"))
    counts = counts[keep]
    lo, hi = lo[keep], hi[keep]
    widths = hi - lo
    centers = np.sqrt(lo * (hi - 1.0))
    density = counts / (x.size * widths)
    return HistogramSpec("log", float(bin_ratio), np.r_[lo, hi[-1]], centers,
                         counts.astype(np.int64), density, widths)


def raw_histogram(values) -> HistogramSpec:
    x = _positive_ints(values)
    support, counts = np.unique(x, return_counts=True)
    return HistogramSpec("raw", None, np.r_[support, support[-1] + 1].astype(float),
                         support.astype(float), counts, counts / x.size, np.ones_like(counts))


def binned_mean(x, y, bin_ratio: float = DEFAULT_BIN_RATIO):
    """Mean of ``y`` in logarithmic bins of ``x`` (positive integers).

    Returns ``(x_mean, y_mean, n)`` for the occupied bins, where ``x_mean`` is
    the mean abscissa of the members.
    """
    x = _positive_ints(x)
    y = np.asarray(y, dtype=float)
    k = np.floor(np.log(x) / math.log(bin_ratio) + 1e-12).astype(np.int64)
    bins, inv = np.unique(k, return_inverse=True)
    n = np.bincount(inv)
    return np.bincount(inv, weights=x) / n, np.bincount(inv, weights=y) / n, n


def valence_distribution(sums, counts, n_bins: int = EMOTION_BINS):
    """Distribution of mean valences ``sums / counts`` over [-1, 1].

    Binning uses exact integer arithmetic so that values on bin edges (such as
    -0.5) land in the bin they open; +1 falls in the last bin.
    """
    k = bin_index(sums, counts, n_bins)
    p = np.bincount(k, minlength=n_bins) / k.size
    centers = -1 + (np.arange(n_bins) + 0.5) * 2 / n_bins
    return centers, p


def bin_index(sums, counts, n_bins: int = EMOTION_BINS) -> np.ndarray:
    s = np.asarray(sums, dtype=np.int64)
    c = np.asarray(counts, dtype=np.int64)
    return np.minimum((n_bins * (s + c)) // (2 * c), n_bins - 1)


# --------------------------------------------------------------------------- #
# fits

@dataclass
class FitResult:
    model: str
    parameters: dict
    fit_range: tuple[float, float]
    residual: float  # root-mean-square residual in the fitted coordinates
    n_points: int
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.parameters[name]

    def rows(self) -> list[tuple[str, float]]:
        out = [("model", self.model)]
        out += list(self.parameters.items())
        out += [("x_min", self.fit_range[0]), ("x_max", self.fit_range[1]),
                ("rms_residual", self.residual), ("n_points", self.n_points)]
        out += list(self.extra.items())
        return out


def _range(fit_range) -> tuple[float, float]:
    lo, hi = fit_range if fit_range is not None else (None, None)
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    if not lo <= hi:
        raise FitError(f"empty fit range ({lo}, {hi})")
    return lo, hi


def _support(x, lo, hi):
    return (max(lo, float(np.min(x))), min(hi, float(np.max(x))))


def fit_power_law(hist: HistogramSpec, fit_range=None, min_count: int = 1) -> FitResult:
    """Least-squares line through ``(ln x, ln density)`` of the occupied bins.

    Residuals are weighted by ``sqrt(count)``, the inverse Poisson standard
    error of ``ln count``; raw histograms and noiseless tables get equal
    weights. ``min_count`` drops sparse bins. A binned maximum-likelihood
    exponent for the same bins is returned in ``extra["gamma_mle"]``.
    """
    lo, hi = _range(fit_range)
    sel = (hist.centers >= lo) & (hist.centers <= hi) & (hist.counts >= max(min_count, 1))
    if np.count_nonzero(sel) < 3:
        raise FitError(f"power-law fit needs 3 occupied bins in range, found {np.count_nonzero(sel)}")
    lx, ly = np.log(hist.centers[sel]), np.log(hist.density[sel])
    w = np.sqrt(hist.counts[sel]) if hist.kind == "log" else None
    slope, intercept = np.polyfit(lx, ly, 1, w=w)
    resid = ly - (slope * lx + intercept)
    extra = {}
    try:
        extra["gamma_mle"] = binned_power_law_mle(hist, (lo, hi), min_count)
    except FitError:
        pass
    return FitResult(
        "power_law",
        {"gamma": float(-slope), "log_c": float(intercept)},
        _support(hist.centers[sel], lo, hi),
        float(np.sqrt(np.mean(resid**2))),
        int(np.count_nonzero(sel)),
        extra,
    )


def _hurwitz_block(gamma, lo, hi):
    # sum of m**-gamma for integer m in [lo, hi)
    return special.zeta(gamma, lo) - special.zeta(gamma, hi)


def binned_power_law_mle(hist: HistogramSpec, fit_range=None, min_count: int = 1) -> float:
    """Exponent maximizing the multinomial likelihood of the bin counts.

    The model is a discrete power law restricted to the integers covered by
    the selected bins.
    """
    lo, hi = _range(fit_range)
    sel = (hist.centers >= lo) & (hist.centers <= hi) & (hist.counts >= max(min_count, 1))
    if np.count_nonzero(sel) < 2:
        raise FitError("binned MLE needs two occupied bins")
    first = hist.edges[:-1][sel]
    last = first + hist.widths[sel]
    counts = hist.counts[sel]

    def nll(g):
        mass = _hurwitz_block(g, first, last)
        return -(counts * np.log(mass / mass.sum())).sum()

    res = optimize.minimize_scalar(nll, bounds=(1.0 + 1e-6, 20.0), method="bounded",
                                   options={"xatol": 1e-8})
    return float(res.x)


def discrete_power_law_mle(samples, x_min: int = 1) -> float:
    """Maximum-likelihood exponent of ``p(x) ~ x**-gamma`` for integers ``x >= x_min``."""
    x = _positive_ints(samples)
    x = x[x >= x_min]
    if x.size < 2:
        raise FitError("too few samples above x_min")
    s = np.log(x).sum()
    res = optimize.minimize_scalar(
        lambda g: g * s + x.size * np.log(special.zeta(g, x_min)),
        bounds=(1.0 + 1e-6, 20.0), method="bounded", options={"xatol": 1e-8},
    )
    return float(res.x)


def shifted_power(L, A, b, delta):
    return A * (np.asarray(L, dtype=float) + b) ** (-delta)


def fit_u_of_L(L, u, fit_range=None) -> FitResult:
    """Nonlinear least squares for ``u = A (L + b)**-delta``."""
    L = np.asarray(L, dtype=float)
    u = np.asarray(u, dtype=float)
    lo, hi = _range(fit_range)
    sel = (L >= lo) & (L <= hi)
    L, u = L[sel], u[sel]
    if np.unique(L).size < 4:
        raise FitError("u(L) fit needs at least four distinct thread lengths")
    if np.any(u <= 0) or np.any(u > 1) or np.any(L < 1):
        raise DataError("u(L) fit needs 0 < u <= 1 and L >= 1")
    p0 = (1.0, 1.0, 0.5)
    try:
        popt, _ = optimize.curve_fit(
            shifted_power, L, u, p0=p0,
            bounds=([1e-9, -1.0 + 1e-9, 0.0], [np.inf, 1e4, 10.0]), maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"u(L) fit did not converge: {exc}") from exc
    A, b, delta = (float(v) for v in popt)
    resid = u - shifted_power(L, A, b, delta)
    return FitResult("shifted_power", {"A": A, "b": b, "delta": delta},
                     _support(L, lo, hi), float(np.sqrt(np.mean(resid**2))), int(L.size))


def _linear_in_log(x, y, shift, lo, hi, model):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (x >= lo) & (x <= hi)
    x, y = x[sel], y[sel]
    if np.unique(x).size < 2:
        raise FitError(f"{model} fit needs at least two bins in range")
    lx = np.log(x + shift)
    B, A = np.polyfit(lx, y, 1)
    resid = y - (A + B * lx)
    return A, B, _support(x, lo, hi), float(np.sqrt(np.mean(resid**2))), int(x.size)


def fit_log_law(x, y, fit_range=None) -> FitResult:
    """``y = A + B ln x`` by ordinary least squares."""
    A, B, rng, res, n = _linear_in_log(x, y, 0.0, *_range(fit_range), "log_law")
    return FitResult("log_law", {"A": A, "B": B}, rng, res, n)


def fit_shifted_log(x, y, b: float, fit_range=None) -> FitResult:
    """``y = A + B ln(x + b)`` with the shift ``b`` held fixed."""
    A, B, rng, res, n = _linear_in_log(x, y, b, *_range(fit_range), "shifted_log")
    return FitResult("shifted_log", {"A": A, "B": B, "b": float(b)}, rng, res, n)


def log_law(x, A, B):
    return A + B * np.log(np.asarray(x, dtype=float))


def u_curve(metrics: ForumMetrics, bin_ratio: float = DEFAULT_BIN_RATIO):
    """Binned ``u = U/L`` against thread length."""
    return binned_mean(metrics.L, metrics.u, bin_ratio)[:2]


def e_d_curve(metrics: ForumMetrics, bin_ratio: float = DEFAULT_BIN_RATIO):
    return binned_mean(metrics.d, metrics.e_d, bin_ratio)[:2]


def e_L_curve(metrics: ForumMetrics, bin_ratio: float = DEFAULT_BIN_RATIO):
    return binned_mean(metrics.L, metrics.e_L, bin_ratio)[:2]


def fit_emotion_curves(
    metrics: ForumMetrics,
    b: float | None = None,
    bin_ratio: float = DEFAULT_BIN_RATIO,
    d_range=None,
    L_range=None,
) -> tuple[FitResult, FitResult]:
    """Shifted-log fit of the binned ``<e>_d(d)`` and log fit of ``<e>_L(L)``.

    The shift ``b`` defaults to the one found by :func:`fit_u_of_L`.
    """
    if b is None:
        b = fit_u_of_L(*u_curve(metrics, bin_ratio))["b"]
    fit_d = fit_shifted_log(*e_d_curve(metrics, bin_ratio), b, d_range)
    fit_L = fit_log_law(*e_L_curve(metrics, bin_ratio), L_range)
    return fit_d, fit_L


# --------------------------------------------------------------------------- #
# activity against emotion

@dataclass
class ActivityByEmotion:
    centers: np.ndarray
    original: np.ndarray  # mean activity of users in each <e>_a bin (nan if empty)
    shuffled: np.ndarray
    n_original: np.ndarray
    n_shuffled: np.ndarray


def _mean_activity(k, a, n_bins):
    n = np.bincount(k, minlength=n_bins)
    total = np.bincount(k, weights=a, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, total / np.maximum(n, 1), np.nan), n


def shuffled_valence_sums(metrics: ForumMetrics, seed) -> np.ndarray:
    """Per-user valence sums after permuting all post valences across the log."""
    rng = np.random.default_rng(seed)
    v = rng.permutation(metrics.post_valence).astype(np.int64)
    return np.bincount(metrics.post_user, weights=v, minlength=metrics.a.size).round().astype(np.int64)


def activity_vs_emotion(metrics: ForumMetrics, shuffle_seed, n_bins: int = EMOTION_BINS) -> ActivityByEmotion:
    if metrics.a.size < 2:
        raise DataError("activity against emotion needs at least two users")
    centers = -1 + (np.arange(n_bins) + 0.5) * 2 / n_bins
    orig, n_o = _mean_activity(bin_index(metrics.user_valence_sum, metrics.a, n_bins), metrics.a, n_bins)
    sums = shuffled_valence_sums(metrics, shuffle_seed)
    shuf, n_s = _mean_activity(bin_index(sums, metrics.a, n_bins), metrics.a, n_bins)
    return ActivityByEmotion(centers, orig, shuf, n_o, n_s)
