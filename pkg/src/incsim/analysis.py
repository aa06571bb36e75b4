"""Empirical incremental-similarity pipeline.

Series are standardised, increment statistics tabulated by lag, lags paired
across datasets at equal statistic levels, and the paired increment samples
compared by a thinned two-sample KS distance and an L1 distance between log
densities.
"""

from dataclasses import asdict, dataclass, field
import csv
import json
import logging
import math
import os

import numpy as np
from scipy import interpolate, optimize, stats

from .distributions import nig_fit
from .errors import DegenerateSeries, IncsimError, LagTooLarge, TargetOutOfRange
from .gaussian_process import TimeSeries

log = logging.getLogger(__name__)


def standardize(ts):
    """Divide by the sample standard deviation; the mean is kept."""
    sd = float(np.std(ts.values))
    if not sd > 0:
        raise DegenerateSeries("series has zero sample variance")
    return TimeSeries(ts.values / sd, ts.dt)


def increments(ts, lag_steps):
    """All overlapping increments ``v[k + lag] - v[k]``."""
    lag_steps = int(lag_steps)
    if lag_steps < 1:
        raise ValueError("lag_steps must be >= 1")
    if lag_steps >= len(ts):
        raise LagTooLarge(f"lag of {lag_steps} steps needs a series longer than {len(ts)}")
    v = ts.values
    return v[lag_steps:] - v[:-lag_steps]


def lag_grid_steps(n, lags_per_octave=1, max_fraction=0.25):
    """Integer lag steps ``round(2^(k / lags_per_octave))`` up to ``max_fraction * n``."""
    top = max(1, int(n * max_fraction))
    k = np.arange(int(math.floor(lags_per_octave * math.log2(top))) + 1)
    return np.unique(np.rint(2.0 ** (k / lags_per_octave)).astype(np.int64))


@dataclass(frozen=True)
class LagTable:
    """Increment statistics by lag.

    ``smoothed`` is the isotonic (nondecreasing) fit of the pairing statistic,
    which is the variance unless ``statistic == "fractional"``.
    """

    lags: np.ndarray
    lag_steps: np.ndarray
    variance: np.ndarray
    count: np.ndarray
    dt: float
    frac_moment: np.ndarray = None
    p_frac: float = None
    statistic: str = "variance"
    smoothed: np.ndarray = field(init=False)

    def __post_init__(self):
        if np.any(np.diff(self.lags) <= 0):
            raise ValueError("lags must be strictly increasing")
        if self.statistic not in ("variance", "fractional"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.statistic == "fractional" and self.frac_moment is None:
            raise ValueError("fractional statistic needs a p_frac column")
        object.__setattr__(self, "smoothed",
                           optimize.isotonic_regression(self.stat, increasing=True).x)

    @property
    def stat(self):
        return self.variance if self.statistic == "variance" else self.frac_moment

    def with_statistic(self, statistic):
        return LagTable(self.lags, self.lag_steps, self.variance, self.count, self.dt,
                        self.frac_moment, self.p_frac, statistic)

    def interval(self):
        return float(self.smoothed[0]), float(self.smoothed[-1])

    def lag_at(self, target):
        """Lag where the smoothed statistic equals ``target``.

        Monotone cubic interpolation in log-lag, inverted by root finding."""
        lo, hi = self.interval()
        if not lo <= target <= hi:
            raise TargetOutOfRange(f"level {target} outside [{lo}, {hi}]", (lo, hi))
        x = np.log(self.lags)
        y = self.smoothed
        if y.size == 1:
            return float(self.lags[0])
        i = int(np.searchsorted(y, target, side="left"))
        if y[i] == target:
            return float(self.lags[i])
        f = interpolate.PchipInterpolator(x, y)
        root = optimize.brentq(lambda t: float(f(t)) - target, x[i - 1], x[i], xtol=1e-14, rtol=1e-14)
        return float(math.exp(root))

    def statistic_at(self, steps):
        """Raw statistic at one of the tabulated lag steps."""
        j = int(np.searchsorted(self.lag_steps, steps))
        return float(self.stat[j])


def variance_by_lag(ts, lags=None, p_frac=None, lags_per_octave=1, statistic="variance"):
    """Increment variance (and ``E|d|^p_frac`` when requested) at each lag.

    ``lags`` are in time units and are rounded to whole steps; by default the
    grid is dyadic, ``2^k dt`` up to a quarter of the series length (finer with
    ``lags_per_octave > 1``).
    """
    n = len(ts)
    if lags is None:
        steps = lag_grid_steps(n, lags_per_octave)
    else:
        steps = np.rint(np.asarray(lags, dtype=float) / ts.dt).astype(np.int64)
        if np.any(steps < 1):
            raise ValueError("every lag must be at least one step")
        steps = np.unique(steps)
    var = np.empty(steps.size)
    frac = np.empty(steps.size) if p_frac is not None else None
    for j, m in enumerate(steps):
        d = increments(ts, m)
        mean = d.mean()
        var[j] = max(float(np.dot(d, d)) / d.size - mean * mean, 0.0)
        if frac is not None:
            frac[j] = np.mean(np.abs(d) ** p_frac)
    return LagTable(steps * ts.dt, steps, var, n - steps, ts.dt, frac, p_frac, statistic)


@dataclass
class MatchResult:
    """One target level for one dataset pair."""

    pair: tuple
    target: float
    lag_i: float
    lag_j: float
    steps_i: int = None
    steps_j: int = None
    stat_i: float = None
    stat_j: float = None
    within_tolerance: bool = None
    ks: float = None
    l1_logdensity: float = None
    thinning: tuple = None
    nig_i: dict = None
    nig_j: dict = None
    note: str = None


def match_lags(table_i, table_j, targets, pair=(0, 1)):
    """Lags ``(s, s')`` at which both smoothed statistics reach each target."""
    lo = max(table_i.interval()[0], table_j.interval()[0])
    hi = min(table_i.interval()[1], table_j.interval()[1])
    out = []
    for t in targets:
        if not lo <= t <= hi:
            raise TargetOutOfRange(f"level {t} outside the common range [{lo}, {hi}]", (lo, hi))
        out.append(MatchResult(tuple(pair), float(t), table_i.lag_at(t), table_j.lag_at(t)))
    return out


@dataclass(frozen=True)
class DensityEstimate:
    centers: np.ndarray
    log_density: np.ndarray
    count: int
    bin_width: float


def density_range(samples, quantile=0.9999):
    return float(np.quantile(np.abs(samples), quantile))


def density_log(samples, bins=100, half_width=None, quantile=0.9999):
    """Log histogram density on ``[-h, h]`` with ``h`` the ``quantile`` of ``|x|``.

    Counts are normalised by the number of samples inside the range, so the
    exponentiated values integrate to one over the occupied bins. Empty bins
    are dropped.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 10 * bins:
        raise ValueError(f"need at least {10 * bins} samples for {bins} bins")
    h = density_range(x, quantile) if half_width is None else float(half_width)
    if not h > 0:
        raise DegenerateSeries("samples are all zero")
    counts, edges = np.histogram(x, bins=bins, range=(-h, h))
    width = edges[1] - edges[0]
    inside = counts.sum()
    keep = counts > 0
    centers = 0.5 * (edges[:-1] + edges[1:])
    return DensityEstimate(centers[keep], np.log(counts[keep] / (inside * width)), int(inside), float(width))


def decorrelation_block(samples, threshold=0.05, max_lag=None, window=1 << 18):
    """Thinning step for a dependent sample.

    The smallest ``k`` beyond which the autocorrelations of the ranks of ``x``
    and of ``|x|`` both stay below ``threshold`` in magnitude, up to
    ``max_lag`` (default ``min(n // 50, 2**14)``). Autocorrelations are taken
    from the leading ``max(window, 32 * max_lag)`` values only.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if max_lag is None:
        max_lag = min(max(1, n // 50), 1 << 14)
    max_lag = min(max_lag, n - 1)
    x = x[: max(window, 32 * max_lag)]
    block = 1
    for y in (x, np.abs(x)):
        r = stats.rankdata(y)
        r -= r.mean()
        m = 1 << int(math.ceil(math.log2(2 * r.size)))
        f = np.fft.rfft(r, m)
        acf = np.fft.irfft(f * np.conj(f), m)[:max_lag + 1]
        acf = np.abs(acf / acf[0])
        tail_max = np.maximum.accumulate(acf[::-1])[::-1]
        below = np.nonzero(tail_max[1:] < threshold)[0]
        block = max(block, int(below[0]) + 1 if below.size else max_lag)
    return block


@dataclass(frozen=True)
class CollapseDistance:
    ks: float
    l1_logdensity: float
    n_a: int
    n_b: int


def collapse_distance(a, b, thinning=(1, 1), bins=100):
    """Two-sample KS on block-thinned samples, and mean absolute difference of
    the two log-density estimates over bins occupied in both."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    ta, tb = (int(t) for t in thinning)
    at, bt = a[::ta], b[::tb]
    ks = float(stats.ks_2samp(at, bt).statistic)
    l1 = math.nan
    if min(a.size, b.size) >= 10 * bins:
        h = max(density_range(a), density_range(b))
        if h > 0:
            da = density_log(a, bins, half_width=h)
            db = density_log(b, bins, half_width=h)
            common, ia, ib = np.intersect1d(np.round(da.centers / da.bin_width), np.round(db.centers / db.bin_width),
                                            return_indices=True)
            if common.size:
                l1 = float(np.mean(np.abs(da.log_density[ia] - db.log_density[ib])))
    return CollapseDistance(ks, l1, int(at.size), int(bt.size))


def batch_means_se(x, n_batches=32):
    """Standard error of the mean of a dependent sample by batch means."""
    x = np.asarray(x)
    k = x.size // n_batches
    if k < 1:
        raise ValueError("too few samples for the requested batches")
    means = x[: k * n_batches].reshape(n_batches, k).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def _fit_summary(sample, max_samples):
    if sample.size > max_samples:
        sample = sample[:: int(math.ceil(sample.size / max_samples))]
    p = nig_fit(sample)
    return {"alpha": p.alpha_shape, "beta": p.beta_asym, "mu": p.mu_loc, "delta": p.delta_scale,
            "steepness": p.steepness}


def fit_nig_by_lag(ts, lag_steps, max_samples=200_000):
    """NIG fit to the increments at each lag; failures are kept as notes."""
    rows = []
    for m in lag_steps:
        d = increments(ts, m)
        row = {"lag": float(m * ts.dt), "lag_steps": int(m), "n": int(d.size)}
        try:
            row.update(_fit_summary(d, max_samples))
            row["note"] = ""
        except IncsimError as exc:
            row["note"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


@dataclass(frozen=True)
class AnalysisConfig:
    """Settings of :func:`is_report`.

    ``targets`` overrides the default geometric ladder of ``n_targets``
    levels laid over the middle ``target_span`` of the common statistic range
    (measured in log-level).
    """

    targets: tuple = None
    n_targets: int = 12
    target_span: tuple = (0.05, 0.95)
    statistic: str = "variance"
    p_frac: float = None
    lags_per_octave: int = 8
    max_lag_fraction: float = 0.25
    match_tolerance: float = 0.01
    ks_threshold: float = 0.03
    bins: int = 100
    thinning_threshold: float = 0.05
    fit_nig: bool = True
    fit_max_samples: int = 200_000

    def __post_init__(self):
        if self.statistic not in ("variance", "fractional"):
            raise ValueError("statistic must be 'variance' or 'fractional'")
        if self.statistic == "fractional" and not (self.p_frac and self.p_frac > 0):
            raise ValueError("the fractional statistic needs p_frac > 0")
        if self.n_targets < 1 or self.lags_per_octave < 1 or self.bins < 1:
            raise ValueError("n_targets, lags_per_octave and bins must be >= 1")
        lo, hi = self.target_span
        if not 0 <= lo < hi <= 1:
            raise ValueError("target_span must satisfy 0 <= lo < hi <= 1")


def default_targets(tables, n_targets=12, span=(0.05, 0.95)):
    lo = max(t.interval()[0] for t in tables)
    hi = min(t.interval()[1] for t in tables)
    if not 0 < lo < hi:
        raise TargetOutOfRange(f"datasets share no statistic range ([{lo}, {hi}])", (lo, hi))
    a, b = math.log(lo), math.log(hi)
    ends = a + (b - a) * span[0], a + (b - a) * span[1]
    return [float(v) for v in np.exp(np.linspace(ends[0], ends[1], n_targets))]


@dataclass
class ISReport:
    targets: list
    lag_tables: list
    matches: list
    failures: list
    ks_threshold: float
    tables: list = field(default=None, repr=False)

    @property
    def collapse(self):
        ok = [m for m in self.matches if m.ks is not None]
        return bool(ok) and not self.failures and all(m.ks < self.ks_threshold for m in ok) \
            and all(m.note is None for m in self.matches)

    def max_ks(self):
        return max((m.ks for m in self.matches if m.ks is not None), default=math.nan)

    def to_dict(self):
        return {
            "targets": self.targets,
            "ks_threshold": self.ks_threshold,
            "collapse": self.collapse,
            "max_ks": self.max_ks(),
            "failures": self.failures,
            "lag_tables": self.lag_tables,
            "matches": [jsonable(asdict(m)) for m in self.matches],
        }

    def to_json(self):
        return json.dumps(jsonable(self.to_dict()), sort_keys=True, indent=2, allow_nan=True) + "\n"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def is_report(datasets, targets=None, config=None, panels=None):
    """Full incremental-similarity comparison of ``datasets`` against the first.

    Returns an :class:`ISReport`. When ``panels`` is a dict it receives, for
    each target index, the log-density columns of the matched increment samples
    on a shared binning (see :func:`write_panels`).
    """
    cfg = config or AnalysisConfig()
    if len(datasets) < 2:
        raise ValueError("need at least two datasets")
    std = [standardize(ts) for ts in datasets]
    tables = [variance_by_lag(ts, lag_grid_steps(len(ts), cfg.lags_per_octave, cfg.max_lag_fraction) * ts.dt,
                              p_frac=cfg.p_frac, statistic=cfg.statistic)
              for ts in std]
    if targets is None:
        targets = cfg.targets
    if targets is None:
        targets = default_targets(tables, cfg.n_targets, cfg.target_span)
    targets = [float(t) for t in targets]
    table_dump = [{"dataset": k, "dt": t.dt, "lags": t.lags, "variance": t.variance,
                   "frac_moment": t.frac_moment, "smoothed": t.smoothed} for k, t in enumerate(tables)]

    matches, failures = [], []
    samples = {}

    def sample(k, steps):
        if (k, steps) not in samples:
            d = increments(std[k], steps)
            samples[(k, steps)] = (d, decorrelation_block(d, cfg.thinning_threshold))
        return samples[(k, steps)]

    fits = {}

    def stat(d):
        return float(np.var(d)) if cfg.statistic == "variance" else float(np.mean(np.abs(d) ** cfg.p_frac))

    def fit(k, steps):
        if not cfg.fit_nig:
            return None
        if (k, steps) not in fits:
            try:
                fits[(k, steps)] = _fit_summary(sample(k, steps)[0], cfg.fit_max_samples)
            except IncsimError as exc:
                fits[(k, steps)] = {"note": f"{type(exc).__name__}: {exc}"}
        return fits[(k, steps)]

    for j in range(1, len(std)):
        for t in targets:
            try:
                m = match_lags(tables[0], tables[j], [t], pair=(0, j))[0]
            except IncsimError as exc:
                failures.append({"pair": [0, j], "target": t, "error": f"{type(exc).__name__}: {exc}"})
                continue
            try:
                m.steps_i, m.steps_j = _snap_pair(tables[0], tables[j], std[0], std[j], m, stat)
                di, bi = sample(0, m.steps_i)
                dj, bj = sample(j, m.steps_j)
            except IncsimError as exc:
                m.note = f"{type(exc).__name__}: {exc}"
                matches.append(m)
                continue
            m.stat_i, m.stat_j = stat(di), stat(dj)
            m.within_tolerance = abs(m.stat_i - m.stat_j) < cfg.match_tolerance * m.stat_i
            dist = collapse_distance(di, dj, (bi, bj), cfg.bins)
            m.ks, m.l1_logdensity, m.thinning = dist.ks, dist.l1_logdensity, (bi, bj)
            m.nig_i, m.nig_j = fit(0, m.steps_i), fit(j, m.steps_j)
            matches.append(m)

    if panels is not None:
        for ti, t in enumerate(targets):
            cols = {}
            for m in matches:
                if m.target == t and m.ks is not None:
                    cols.setdefault(0, sample(0, m.steps_i)[0])
                    cols[m.pair[1]] = sample(m.pair[1], m.steps_j)[0]
            if cols:
                panels[ti] = _panel(cols, cfg.bins)
    return ISReport(targets, table_dump, matches, failures, cfg.ks_threshold, tables)


def _snap_pair(table_i, table_j, ts_i, ts_j, m, stat):
    """Whole-step lags for a match.

    The reference lag is rounded to the nearest step; its realised statistic
    then sets the level for the other dataset, whose lag is rounded down or up,
    whichever realises the closer statistic.
    """
    si = max(1, int(round(m.lag_i / ts_i.dt)))
    level = stat(increments(ts_i, si))
    try:
        lag_j = table_j.lag_at(level)
    except TargetOutOfRange:
        lag_j = m.lag_j
    lo = max(1, int(math.floor(lag_j / ts_j.dt)))
    cands = sorted({lo, lo + 1} if lo + 1 < len(ts_j) else {lo})
    sj = min(cands, key=lambda k: (abs(stat(increments(ts_j, k)) - level), k))
    return si, sj


def _panel(cols, bins):
    h = max(density_range(d) for d in cols.values())
    edges = np.linspace(-h, h, bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    out = {"center": centers}
    for k in sorted(cols):
        d = cols[k]
        if d.size < 10 * bins:
            continue
        est = density_log(d, bins, half_width=h)
        col = np.full(bins, np.nan)
        idx = np.rint((est.centers + h) / est.bin_width - 0.5).astype(int)
        col[idx] = est.log_density
        out[f"log_density_{k}"] = col
    return out


def write_panels(panels, output_dir, prefix="target"):
    """One CSV per target level; absent bins are left blank."""
    paths = []
    for ti in sorted(panels):
        cols = panels[ti]
        names = list(cols)
        path = os.path.join(output_dir, f"{prefix}_{ti:02d}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*(cols[c] for c in names)):
                w.writerow(["" if not math.isfinite(v) else repr(float(v)) for v in row])
        paths.append(path)
    return paths
