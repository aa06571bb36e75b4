"""Volatility-modulated Gaussian processes ``Y_t = mu + sigma_t X_t + beta sigma_t^2``
with the volatility taken outside the stochastic integral.

``X`` is stationary Gaussian with unit variance and correlation ``r``; ``sigma``
is independent of ``X``. When ``sigma`` belongs to a family indexed by the same
``r`` (``pairing``), equal values of ``r`` at two lags give equal joint laws,
so increments of differently indexed members can be matched lag by lag.
"""

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy import optimize, special

from .errors import OutOfRange
from .gaussian_process import CorrelationFunction, TimeSeries, simulate_gaussian
from .trawl import TrawlProcessSpec, simulate_trawl


@dataclass(frozen=True)
class LogTrawl:
    """``log sigma^2`` is a trawl process. The trawl's own ``dt`` is replaced by
    the simulation step."""

    spec: TrawlProcessSpec

    def index(self, u):
        return self.spec.set.autodependence(u)


@dataclass(frozen=True)
class AbsGaussRoot:
    """``sigma^2 = |Z|^(1/2)`` with ``Z`` an independent unit Gaussian process of
    correlation ``r_vol``; hence ``sigma = |Z|^(1/4)``."""

    r_vol: CorrelationFunction

    def index(self, u):
        return self.r_vol(u)


@dataclass(frozen=True)
class BssPrimeSpec:
    mu_loc: float
    beta_coef: float
    base_corr: CorrelationFunction
    vol: object
    pairing: bool = True

    def __post_init__(self):
        if self.pairing:
            u = np.concatenate([np.linspace(0.0, 5.0, 51), np.geomspace(5.0, 500.0, 20)])
            a = np.asarray(self.vol.index(u), dtype=float)
            b = np.asarray(self.base_corr(u), dtype=float)
            if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
                raise ValueError("paired volatility must share the correlation index of the Gaussian factor")


def simulate_components(spec, n, dt, rng_seed, stream_id=0, threads=1):
    """Return ``(Y, sigma, X)`` as arrays; ``X`` and ``sigma`` use independent streams."""
    x = simulate_gaussian(spec.base_corr, n, dt, rng_seed, (stream_id, 0)).values
    vol = spec.vol
    if isinstance(vol, LogTrawl):
        tspec = replace(vol.spec, dt=dt)
        log_s2 = simulate_trawl(tspec, n, rng_seed, (stream_id, 1), threads=threads).values
        sigma = np.exp(0.5 * log_s2)
    elif isinstance(vol, AbsGaussRoot):
        z = simulate_gaussian(vol.r_vol, n, dt, rng_seed, (stream_id, 1)).values
        sigma = np.abs(z) ** 0.25
    else:
        raise TypeError(f"unknown volatility model {type(vol).__name__}")
    y = spec.mu_loc + sigma * x + spec.beta_coef * sigma**2
    return y, sigma, x


def simulate_bssprime(spec, n, dt, rng_seed, stream_id=0, threads=1):
    y, _, _ = simulate_components(spec, n, dt, rng_seed, stream_id, threads)
    return TimeSeries(y, dt)


# ---------------------------------------------------------------------------
# variograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariogramTable:
    lags: np.ndarray
    lag_steps: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    reps: int
    variance: float
    variance_se: float

    @property
    def plateau(self):
        """``2 Var(Y)``, the large-lag limit."""
        return 2.0 * self.variance


def bssprime_variogram_mc(spec, lags, reps, rng_seed, n=2**18, dt=0.01, threads=1):
    """Monte Carlo ``E{(Y_{t+u} - Y_t)^2}`` from ``reps`` independent paths.

    Each path gives one overlapping-increment average per lag; the standard
    error is the spread of those averages across paths."""
    lags = np.asarray(lags, dtype=float)
    if np.any(lags <= 0) or reps < 1:
        raise ValueError("lags must be positive and reps >= 1")
    steps = np.maximum(1, np.rint(lags / dt).astype(int))
    per_rep = np.empty((reps, steps.size))
    var = np.empty(reps)
    for i in range(reps):
        y, _, _ = simulate_components(spec, n, dt, rng_seed, i, threads)
        for j, m in enumerate(steps):
            d = y[m:] - y[:-m]
            per_rep[i, j] = np.mean(d * d)
        var[i] = np.var(y)
    se = per_rep.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.full(steps.size, np.nan)
    vse = var.std(ddof=1) / math.sqrt(reps) if reps > 1 else math.nan
    return VariogramTable(steps * dt, steps, per_rep.mean(axis=0), se, reps, float(var.mean()), float(vse))


@dataclass(frozen=True)
class VolMoments:
    """Moments of the volatility entering the variogram at a given lag."""

    mean_sigma: float
    var_sigma: float
    mean_sigma2: float
    var_sigma2: float
    rho: float      # autocorrelation of sigma
    varrho: float   # autocorrelation of sigma^2


def _abs_moment(p):
    return 2.0 ** (0.5 * p) * special.gamma(0.5 * (p + 1.0)) / math.sqrt(math.pi)


def _abs_cross_moment(p, r):
    """``E|Z_1|^p |Z_2|^p`` for standard bivariate normals with correlation ``r``."""
    return 2.0**p / math.pi * special.gamma(0.5 * (p + 1.0)) ** 2 * special.hyp2f1(-0.5 * p, -0.5 * p, 0.5, r * r)


def _cgf(seed, s):
    """``log E exp(s L')`` for real ``s``."""
    from .distributions import GaussianSeed, NIGSeed
    if isinstance(seed, GaussianSeed):
        return seed.mean * s + 0.5 * seed.variance * s * s
    if isinstance(seed, NIGSeed):
        p = seed.params
        if abs(p.beta_asym + s) >= p.alpha_shape:
            return math.inf
        return p.mu_loc * s + p.delta_scale * (p.gamma - math.sqrt(p.alpha_shape**2 - (p.beta_asym + s) ** 2))
    return math.inf


def vol_moments(vol, u):
    """Analytic volatility moments at lag ``u``.

    For ``AbsGaussRoot`` the cross moments use the bivariate-normal absolute
    moment identity; for ``LogTrawl`` they follow from the joint cumulant of the
    trawl evaluated on the real axis."""
    if isinstance(vol, AbsGaussRoot):
        r = float(vol.r_vol(u))
        m1, m2, m4 = _abs_moment(0.25), _abs_moment(0.5), _abs_moment(1.0)
        v1, v2 = m2 - m1**2, m4 - m2**2
        rho = (_abs_cross_moment(0.25, r) - m1**2) / v1
        varrho = (_abs_cross_moment(0.5, r) - m2**2) / v2
        return VolMoments(*map(float, (m1, v1, m2, v2, rho, varrho)))
    if isinstance(vol, LogTrawl):
        a = vol.spec.set.area
        r = float(vol.spec.set.autodependence(u))
        k = lambda s: _cgf(vol.spec.seed, s)
        if not math.isfinite(k(2.0)):
            raise ValueError("sigma^2 has no finite variance for this seed")
        m1, m2, m4 = math.exp(a * k(0.5)), math.exp(a * k(1.0)), math.exp(a * k(2.0))
        v1, v2 = m2 - m1**2, m4 - m2**2
        cross1 = math.exp(2.0 * a * (1.0 - r) * k(0.5) + a * r * k(1.0))
        cross2 = math.exp(2.0 * a * (1.0 - r) * k(1.0) + a * r * k(2.0))
        rho = (cross1 - m1**2) / v1 if v1 > 0 else 1.0
        varrho = (cross2 - m2**2) / v2 if v2 > 0 else 1.0
        return VolMoments(*map(float, (m1, v1, m2, v2, rho, varrho)))
    raise TypeError(f"unknown volatility model {type(vol).__name__}")


def bssprime_variogram_formula(spec, u, moments=None):
    """The variogram expression as published,

        2[E{sigma}^2 (1 - r) + V{sigma} r (1 - rho) + 2 beta^2 V{sigma^2} (1 - varrho)],

    evaluated verbatim. ``moments`` defaults to :func:`vol_moments` at ``u``."""
    m = vol_moments(spec.vol, u) if moments is None else moments
    r_u, beta = float(spec.base_corr(u)), spec.beta_coef
    return 2.0 * (m.mean_sigma**2 * (1.0 - r_u) + m.var_sigma * r_u * (1.0 - m.rho)
                  + 2.0 * beta**2 * m.var_sigma2 * (1.0 - m.varrho))


def variogram_first_principles(spec, u, moments=None):
    """Direct expansion of ``E{(Y_u - Y_0)^2}`` for independent symmetric ``X``:
    ``2[E{sigma^2} - E{sigma_u sigma_0} r] + 2 beta^2 V{sigma^2} (1 - varrho)``."""
    m = vol_moments(spec.vol, u) if moments is None else moments
    r_u, beta = float(spec.base_corr(u)), spec.beta_coef
    return (2.0 * (m.mean_sigma**2 * (1.0 - r_u) + m.var_sigma * (1.0 - r_u * m.rho))
            + 2.0 * beta**2 * m.var_sigma2 * (1.0 - m.varrho))


def vol_autocorr_mc(vol, lags, n=10**6, dt=0.01, rng_seed=0):
    """Sample autocorrelations of ``sigma`` and ``sigma^2`` at ``lags`` from one
    path, as a check on the analytic values in :func:`vol_moments`."""
    spec = BssPrimeSpec(0.0, 0.0, _unit_corr, vol, pairing=False)
    _, sigma, _ = simulate_components(spec, n, dt, rng_seed, 0)
    out = []
    for u in np.atleast_1d(lags):
        k = int(round(u / dt))
        pair = []
        for s in (sigma, sigma * sigma):
            a, b = s[k:] - s.mean(), s[:s.size - k] - s.mean()
            pair.append(float(np.mean(a * b) / s.var()))
        out.append(tuple(pair))
    return out


class _UnitCorr(CorrelationFunction):
    def __call__(self, u):
        return np.exp(-np.asarray(u, dtype=float))


_unit_corr = _UnitCorr()


def variogram_report(spec, table, nsigma=4.0):
    """Rows comparing the published expression, the first-principles expansion
    and the Monte Carlo table lag by lag."""
    rows = []
    for u, mc, se in zip(table.lags, table.mean, table.se):
        m = vol_moments(spec.vol, u)
        fp = variogram_first_principles(spec, u, m)
        pub = bssprime_variogram_formula(spec, u, m)
        rows.append({
            "lag": float(u), "r": float(spec.base_corr(u)), "mc": float(mc), "mc_se": float(se),
            "first_principles": float(fp), "published": float(pub),
            "first_principles_z": float((fp - mc) / se), "published_z": float((pub - mc) / se),
            "published_flagged": bool(abs(pub - mc) > nsigma * se),
        })
    return rows


def lag_identify(source, target, lags=None, reps=4, rng_seed=0, n=2**18, dt=0.01):
    """Lag at which the isotonically smoothed MC variogram reaches ``target``.

    ``source`` is either a :class:`VariogramTable` or a :class:`BssPrimeSpec`;
    for a spec the table is first estimated on ``lags`` (default a log grid
    from ``dt`` to ``n dt / 8``). The lag is found by linear interpolation
    between the bracketing grid points.
    """
    if isinstance(source, BssPrimeSpec):
        if lags is None:
            lags = np.unique(np.rint(np.geomspace(1, n // 8, 64))) * dt
        table = bssprime_variogram_mc(source, lags, reps, rng_seed, n=n, dt=dt)
    else:
        table = source
    smooth = optimize.isotonic_regression(table.mean, increasing=True).x
    if not smooth[0] <= target <= smooth[-1]:
        raise OutOfRange(f"target {target} outside the observed variogram range "
                         f"[{smooth[0]}, {smooth[-1]}] (plateau 2 Var(Y) = {table.plateau})")
    i = int(np.searchsorted(smooth, target, side="left"))
    if i == 0 or smooth[i] == target:
        return float(table.lags[i])
    lo, hi = smooth[i - 1], smooth[i]
    w = (target - lo) / (hi - lo)
    return float(table.lags[i - 1] + w * (table.lags[i] - table.lags[i - 1]))
