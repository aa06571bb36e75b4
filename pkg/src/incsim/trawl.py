"""Trawl processes ``X_t = L(A + (t, 0))`` driven by a homogeneous Lévy basis.

Only monotone trawl sets ``A = {(s, x): s <= 0, 0 <= x <= h(s)}`` are handled,
with ``h`` increasing to ``h(0)``. For such sets the overlap
``|A ∩ A_u| = ∫_{-inf}^{-u} h(s) ds`` is one-dimensional and the
autodependence is ``r(u) = |A ∩ A_u| / |A|``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy import integrate

from .errors import ResourceLimit
from .gaussian_process import CorrelationFunction, TimeSeries
from .rng import stream

MAX_TRAWL_COLUMNS = 10**8
_BLOCK = 1 << 16
_MID_KEY = 1 << 39


class TrawlSet:
    """Monotone trawl set given by its height function on ``(-inf, 0]``."""

    def height(self, s):
        raise NotImplementedError

    @property
    def area(self):
        return self.overlap(0.0)

    def overlap(self, u):
        """``|A ∩ A_u|`` by quadrature of the height function."""
        u = np.asarray(u, dtype=float)
        f = np.vectorize(lambda v: integrate.quad(self.height, -np.inf, -v, epsabs=1e-13, limit=200)[0])
        return f(u)

    def autodependence(self, u):
        return self.overlap(u) / self.area


@dataclass(frozen=True)
class ExponentialTrawl(TrawlSet):
    """``h(s) = amplitude * exp(lambda s)``."""

    lambda_rate: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.lambda_rate > 0 and self.amplitude > 0):
            raise ValueError("lambda_rate and amplitude must be > 0")

    def height(self, s):
        return self.amplitude * np.exp(self.lambda_rate * np.asarray(s, dtype=float))

    @property
    def area(self):
        return self.amplitude / self.lambda_rate

    def overlap(self, u):
        return self.area * np.exp(-self.lambda_rate * np.asarray(u, dtype=float))


@dataclass(frozen=True)
class PowerTrawl(TrawlSet):
    """``h(s) = amplitude * (1 + lambda |s|)^(-nu)``, ``nu > 1``."""

    lambda_rate: float = 1.0
    nu_exp: float = 2.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.lambda_rate > 0 and self.amplitude > 0):
            raise ValueError("lambda_rate and amplitude must be > 0")
        if not self.nu_exp > 1:
            raise ValueError("nu_exp must be > 1 for a trawl of finite area")

    def height(self, s):
        return self.amplitude * (1.0 + self.lambda_rate * np.abs(np.asarray(s, dtype=float))) ** (-self.nu_exp)

    @property
    def area(self):
        return self.amplitude / (self.lambda_rate * (self.nu_exp - 1.0))

    def overlap(self, u):
        return self.area * (1.0 + self.lambda_rate * np.asarray(u, dtype=float)) ** (1.0 - self.nu_exp)


@dataclass(frozen=True)
class CorrelationTrawl(TrawlSet):
    """Trawl whose autodependence is a given convex correlation function:
    ``h(s) = area * (-r'(-s))``. Used to pair a volatility trawl with the
    correlation of a Gaussian factor."""

    corr: CorrelationFunction
    area_: float = 1.0

    def __post_init__(self):
        if not self.area_ > 0:
            raise ValueError("area must be > 0")

    def height(self, s):
        return -self.area_ * self.corr.derivative(-np.asarray(s, dtype=float))

    @property
    def area(self):
        return self.area_

    def overlap(self, u):
        return self.area_ * self.corr(u)


def trawl_area(trawl_set):
    return float(trawl_set.area)


def autodependence(trawl_set, u):
    if np.any(np.asarray(u) < 0):
        raise ValueError("lag must be >= 0")
    return trawl_set.autodependence(u)


@dataclass(frozen=True)
class TrawlProcessSpec:
    """A trawl set paired with a Lévy seed, plus the simulation grid.

    ``lag_resolution`` controls the lag binning: lags up to that many steps are
    resolved exactly, beyond it bins grow so that their relative width stays
    below ``1 / lag_resolution``.
    """

    set: TrawlSet
    seed: object
    dt: float = 0.01
    truncation_eps: float = 1e-6
    lag_resolution: int = 16

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not 0 < self.truncation_eps < 1:
            raise ValueError("truncation_eps must lie in (0, 1)")
        if self.lag_resolution < 1:
            raise ValueError("lag_resolution must be >= 1")

    @cached_property
    def grid(self):
        return TrawlGrid.build(self)


@dataclass(frozen=True)
class TrawlGrid:
    """Slice decomposition of the discretised trawl.

    Column ``c'`` of width ``dt`` is cut horizontally into slices; slice ``b``
    has area ``slice_area[b]`` and belongs to ``A_{t_c}`` exactly when
    ``0 <= c - c' < window[b]``. The height of column ``k`` steps in the past is
    the mean height of the trawl over that column's lag bin, so the overlap of
    the discrete sets equals ``|A ∩ A_u|`` at every bin edge.
    """

    edges: np.ndarray
    slice_area: np.ndarray
    window: np.ndarray
    truncated_area: float

    @classmethod
    def build(cls, spec):
        trawl, dt = spec.set, spec.dt
        total = trawl.area
        k = _truncation_steps(trawl, dt, spec.truncation_eps)
        edges = _lag_bin_edges(k, spec.lag_resolution)
        ov = np.asarray(trawl.overlap(edges * dt), dtype=float)
        height = np.diff(-ov) / (np.diff(edges) * dt)
        height = np.maximum.accumulate(np.clip(height, 0.0, None)[::-1])[::-1]
        slice_area = dt * (height - np.append(height[1:], 0.0))
        return cls(edges=edges, slice_area=slice_area, window=edges[1:].copy(),
                   truncated_area=float(total - ov[0] + ov[-1]))

    def overlap(self, m):
        """Exact ``|A ∩ A_{m dt}|`` of the discrete sets."""
        return float(np.sum(self.slice_area * np.clip(self.window - m, 0, None)))

    def increment_area(self, m):
        """Area of ``A \\ A_{m dt}`` (equal to that of ``A_{m dt} \\ A``)."""
        return float(np.sum(self.slice_area * np.minimum(self.window, m)))

    @property
    def n_bins(self):
        return self.window.size


def _truncation_steps(trawl, dt, eps):
    target = eps * trawl.area
    hi = 1
    while float(trawl.overlap(hi * dt)) > target:
        hi *= 2
        if hi > 4 * MAX_TRAWL_COLUMNS:
            break
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if float(trawl.overlap(mid * dt)) > target:
            lo = mid
        else:
            hi = mid
    if hi > MAX_TRAWL_COLUMNS:
        raise ResourceLimit(
            f"truncated trawl spans {hi} columns of width dt={dt} (limit {MAX_TRAWL_COLUMNS})")
    return hi


def _lag_bin_edges(k, resolution):
    edges = [0]
    e = 0
    while e < k:
        e = min(k, e + max(1, e // resolution))
        edges.append(e)
    return np.asarray(edges, dtype=np.int64)


def _column_draws(seed, area, rng_seed, key, lo, hi):
    """Draws of ``L`` on cells of the given area for columns ``lo <= c < hi``.

    Each block of ``_BLOCK`` consecutive columns has its own stream, so a
    column's value does not depend on which range is requested."""
    first, last = lo // _BLOCK, (hi - 1) // _BLOCK
    parts = [seed.sample(area, _BLOCK, stream(rng_seed, *key, blk)) for blk in range(first, last + 1)]
    out = np.concatenate(parts) if len(parts) > 1 else parts[0]
    start = lo - first * _BLOCK
    return out[start:start + hi - lo]


def _bin_contribution(spec, b, n, rng_seed, stream_id):
    grid = spec.grid
    area = float(grid.slice_area[b])
    w = int(grid.window[b])
    key = (0x5452, stream_id, b)
    if area <= 0.0:
        return None
    if w <= n:
        d = _column_draws(spec.seed, area, rng_seed, key, -w + 1, n)
        cs = np.empty(d.size + 1)
        cs[0] = 0.0
        np.cumsum(d, out=cs[1:])
        return cs[w:w + n] - cs[:n]
    head = _column_draws(spec.seed, area, rng_seed, key, -w + 1, -w + 1 + n)
    tail = _column_draws(spec.seed, area, rng_seed, key, 1, n) if n > 1 else np.empty(0)
    mid = spec.seed.sample(area * (w - n), 1, stream(rng_seed, *key, _MID_KEY))[0]
    out = np.cumsum(head[::-1])[::-1]
    out += mid
    out[1:] += np.cumsum(tail)
    return out


def simulate_trawl(spec, n, rng_seed, stream_id=0, threads=1):
    """Grid path of the trawl process at times ``0, dt, ..., (n-1) dt``.

    Contributions of the lag bins are summed in bin order whatever the number
    of threads, so output is reproducible bit for bit.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    grid = spec.grid
    x = np.zeros(n)
    bins = range(grid.n_bins)
    if threads <= 1:
        for b in bins:
            part = _bin_contribution(spec, b, n, rng_seed, stream_id)
            if part is not None:
                x += part
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for lo in range(0, grid.n_bins, threads):
                chunk = range(lo, min(lo + threads, grid.n_bins))
                for part in pool.map(lambda b: _bin_contribution(spec, b, n, rng_seed, stream_id), chunk):
                    if part is not None:
                        x += part
    return TimeSeries(x, spec.dt)


def trawl_increment_cumulant(spec, phi, u):
    """Cumulant function of ``X_{t+u} - X_t``."""
    if u < 0:
        raise ValueError("lag must be >= 0")
    a = spec.set.area
    r = float(spec.set.autodependence(u))
    return a * (1.0 - r) * (spec.seed.cumulant(phi) + spec.seed.cumulant(-np.asarray(phi, dtype=float)))


def trawl_joint_cumulant(spec, phi, psi, u):
    """Cumulant function of ``(X_t, X_{t+u})`` at ``(phi, psi)``."""
    if u < 0:
        raise ValueError("lag must be >= 0")
    a = spec.set.area
    r = float(spec.set.autodependence(u))
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    c = spec.seed.cumulant
    return a * (1.0 - r) * c(phi) + a * r * c(phi + psi) + a * (1.0 - r) * c(psi)


def marginal_nig(spec):
    """NIG law of ``X_t`` for an NIG seed (cumulant scaled by the trawl area)."""
    return spec.seed.params.convolved(spec.set.area)
