"""Stationary unit-variance Gaussian processes indexed by their correlation
function, simulated exactly on a regular grid by circulant embedding."""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import linalg, optimize

from .errors import EmbeddingFailure
from .rng import stream

log = logging.getLogger(__name__)


class CorrelationFunction:
    """Positive, continuous correlation function strictly decreasing from
    ``r(0) = 1`` to 0. Subclasses provide ``__call__`` and usually a closed-form
    ``inverse``; the generic inverse brackets and bisects."""

    def __call__(self, u):
        raise NotImplementedError

    def derivative(self, u):
        raise NotImplementedError

    def inverse(self, target):
        return _bisect_inverse(self, target)

    @property
    def integrable(self):
        return True


def _bisect_inverse(r, target):
    hi = 1.0
    while r(hi) > target:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("could not bracket target")
    lo = 0.0
    return optimize.brentq(lambda u: float(r(u)) - target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                           maxiter=2000)


@dataclass(frozen=True)
class Exponential(CorrelationFunction):
    lambda_rate: float = 1.0

    def __post_init__(self):
        if not self.lambda_rate > 0:
            raise ValueError("lambda_rate must be > 0")

    def __call__(self, u):
        return np.exp(-self.lambda_rate * np.asarray(u, dtype=float))

    def derivative(self, u):
        return -self.lambda_rate * self(u)

    def inverse(self, target):
        return -math.log(target) / self.lambda_rate


@dataclass(frozen=True)
class StretchedExponential(CorrelationFunction):
    lambda_rate: float = 1.0
    kappa_exp: float = 0.5

    def __post_init__(self):
        if not self.lambda_rate > 0:
            raise ValueError("lambda_rate must be > 0")
        if not 0 < self.kappa_exp <= 1:
            raise ValueError("kappa_exp must lie in (0, 1]")

    def __call__(self, u):
        return np.exp(-(self.lambda_rate * np.asarray(u, dtype=float)) ** self.kappa_exp)

    def derivative(self, u):
        lu = self.lambda_rate * np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.kappa_exp * self.lambda_rate * lu ** (self.kappa_exp - 1) * np.exp(-lu**self.kappa_exp)

    def inverse(self, target):
        return (-math.log(target)) ** (1.0 / self.kappa_exp) / self.lambda_rate


@dataclass(frozen=True)
class PowerDecay(CorrelationFunction):
    """``(1 + lambda u)^(-nu)``. With ``nu <= 1`` the correlation is not
    integrable (long memory); allowed, but sample statistics converge slowly."""

    lambda_rate: float = 1.0
    nu_exp: float = 2.0

    def __post_init__(self):
        if not self.lambda_rate > 0:
            raise ValueError("lambda_rate must be > 0")
        if not self.nu_exp > 0:
            raise ValueError("nu_exp must be > 0")

    def __call__(self, u):
        return (1.0 + self.lambda_rate * np.asarray(u, dtype=float)) ** (-self.nu_exp)

    def derivative(self, u):
        lu = self.lambda_rate * np.asarray(u, dtype=float)
        return -self.nu_exp * self.lambda_rate * (1.0 + lu) ** (-self.nu_exp - 1.0)

    def inverse(self, target):
        return (target ** (-1.0 / self.nu_exp) - 1.0) / self.lambda_rate

    @property
    def integrable(self):
        return self.nu_exp > 1


def corr_eval(r, u):
    if np.any(np.asarray(u) < 0):
        raise ValueError("lag must be >= 0")
    return r(u)


def corr_invert(r, target):
    """Lag ``u >= 0`` with ``r(u) = target``, ``0 < target < 1``."""
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    return float(r.inverse(target))


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    dt: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a time series needs at least two values")
        if not np.all(np.isfinite(v)):
            raise ValueError("time series values must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def circulant_eigenvalues(r, n, dt, pad=1):
    """Eigenvalues of the minimal circulant embedding of the covariance of
    ``n`` grid points, enlarged ``pad`` times."""
    m = 1 << max(1, math.ceil(math.log2(2 * (n - 1)))) if n > 1 else 2
    m *= pad
    half = m // 2
    c = np.asarray(r(np.arange(half + 1) * dt), dtype=float)
    row = np.concatenate([c, c[-2:0:-1]])
    return np.fft.rfft(row).real, m


def simulate_gaussian(r, n, dt, rng_seed, stream_id=0):
    """Stationary, mean zero, unit variance Gaussian path with correlation ``r``
    on ``n`` grid points of step ``dt``.

    Circulant embedding is tried with the embedding length doubled until no
    eigenvalue is below ``-1e-8 * max``, up to 16n; after that a dense Cholesky
    factorisation with jitter of at most 1e-10 is attempted.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    g = stream(rng_seed, 0x4750, stream_id)
    pad = 1
    while True:
        lam, m = circulant_eigenvalues(r, n, dt, pad)
        if lam.min() >= -1e-8 * lam.max():
            break
        if m >= 16 * n:
            log.info("circulant embedding has negative eigenvalues, using Cholesky")
            return TimeSeries(_cholesky_path(r, n, dt, g), dt)
        pad *= 2
    lam = np.clip(lam, 0.0, None)
    # Hermitian spectral noise; irfft of it is a real path with covariance c
    half = m // 2
    w = g.standard_normal(half + 1) + 1j * g.standard_normal(half + 1)
    w[0] = w[0].real * math.sqrt(2.0)
    w[-1] = w[-1].real * math.sqrt(2.0)
    x = np.fft.irfft(np.sqrt(lam / 2.0) * w, m) * math.sqrt(m)
    return TimeSeries(x[:n], dt)


def _cholesky_path(r, n, dt, g):
    if n > 20000:
        raise EmbeddingFailure(f"circulant embedding failed and n={n} is too large for Cholesky")
    cov = linalg.toeplitz(r(np.arange(n) * dt))
    for jitter in (0.0, 1e-14, 1e-12, 1e-10):
        try:
            chol = linalg.cholesky(cov + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            continue
        return chol @ g.standard_normal(n)
    raise EmbeddingFailure("covariance is not positive definite on this grid")
