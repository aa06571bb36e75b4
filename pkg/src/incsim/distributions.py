"""Seed laws for Lévy bases: Gaussian, normal inverse Gaussian and symmetric
alpha-stable.

NIG convention: parameters ``(alpha, beta, mu, delta)`` with density

    f(x) = alpha * delta * K_1(alpha * q) / (pi * q) * exp(delta * gamma + beta * (x - mu)),
    q = sqrt(delta**2 + (x - mu)**2),  gamma = sqrt(alpha**2 - beta**2),

and cumulant function ``i mu phi + delta (gamma - sqrt(alpha**2 - (beta + i phi)**2))``.
Convolution of ``m`` copies multiplies ``delta`` and ``mu`` by ``m``.

The stable laws are symmetric with cumulant ``-gamma |phi|**alpha``.
"""

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy import optimize, special, stats

from .errors import FitInfeasible
from .rng import stream


@dataclass(frozen=True)
class NIGParams:
    alpha_shape: float
    beta_asym: float
    mu_loc: float
    delta_scale: float

    def __post_init__(self):
        if not self.alpha_shape > 0:
            raise ValueError(f"alpha_shape must be > 0, got {self.alpha_shape}")
        if not self.delta_scale > 0:
            raise ValueError(f"delta_scale must be > 0, got {self.delta_scale}")
        if not abs(self.beta_asym) < self.alpha_shape:
            raise ValueError("|beta_asym| must be < alpha_shape")

    @property
    def gamma(self):
        return math.sqrt(self.alpha_shape**2 - self.beta_asym**2)

    @property
    def mean(self):
        return self.mu_loc + self.delta_scale * self.beta_asym / self.gamma

    @property
    def variance(self):
        return self.delta_scale * self.alpha_shape**2 / self.gamma**3

    @property
    def skewness(self):
        a, b = self.alpha_shape, self.beta_asym
        return 3.0 * b / (a * math.sqrt(self.delta_scale * self.gamma))

    @property
    def excess_kurtosis(self):
        a, b = self.alpha_shape, self.beta_asym
        return 3.0 * (1.0 + 4.0 * b * b / (a * a)) / (self.delta_scale * self.gamma)

    @property
    def steepness(self):
        """Product ``delta * alpha``; grows towards the Gaussian limit."""
        return self.delta_scale * self.alpha_shape

    def convolved(self, m):
        """Law of the sum of ``m`` (possibly fractional) i.i.d. copies."""
        return replace(self, mu_loc=m * self.mu_loc, delta_scale=m * self.delta_scale)

    def rescaled(self, loc, scale):
        """Law of ``loc + scale * X``."""
        return NIGParams(float(self.alpha_shape / scale), float(self.beta_asym / scale),
                         float(loc + scale * self.mu_loc), float(scale * self.delta_scale))


@dataclass(frozen=True)
class StableParams:
    alpha_stab: float
    gamma_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha_stab < 2:
            raise ValueError(f"alpha_stab must lie in (0, 2), got {self.alpha_stab}")
        if not self.gamma_scale > 0:
            raise ValueError(f"gamma_scale must be > 0, got {self.gamma_scale}")


# ---------------------------------------------------------------------------
# Lévy seeds
# ---------------------------------------------------------------------------

class LevySeed:
    """Infinitely divisible law of ``L(S)`` for a set ``S`` of unit measure.

    Subclasses supply :meth:`cumulant` and :meth:`sample`; the law of ``L(S)``
    for ``|S| = m`` has cumulant ``m * cumulant``.
    """

    symmetric = False

    def cumulant(self, phi):
        raise NotImplementedError

    def sample(self, area, size, rng):
        raise NotImplementedError

    @property
    def variance(self):
        return math.inf


@dataclass(frozen=True)
class GaussianSeed(LevySeed):
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be >= 0")

    @property
    def symmetric(self):
        return self.mean == 0.0

    def cumulant(self, phi):
        phi = np.asarray(phi, dtype=float)
        return 1j * self.mean * phi - 0.5 * self.variance * phi**2

    def sample(self, area, size, rng):
        x = rng.standard_normal(size)
        x *= math.sqrt(area * self.variance)
        x += area * self.mean
        return x


@dataclass(frozen=True)
class NIGSeed(LevySeed):
    params: NIGParams

    @property
    def symmetric(self):
        return self.params.beta_asym == 0.0 and self.params.mu_loc == 0.0

    @property
    def variance(self):
        return self.params.variance

    def cumulant(self, phi):
        return nig_cumulant(phi, self.params)

    def sample(self, area, size, rng):
        return _nig_draw(self.params.convolved(area), size, rng)


@dataclass(frozen=True)
class StableSeed(LevySeed):
    params: StableParams
    symmetric = True

    def cumulant(self, phi):
        p = self.params
        return -p.gamma_scale * np.abs(np.asarray(phi, dtype=float)) ** p.alpha_stab + 0j

    def sample(self, area, size, rng):
        p = self.params
        scale = (p.gamma_scale * area) ** (1.0 / p.alpha_stab)
        return scale * _standard_stable(p.alpha_stab, size, rng)


def seed_cumulant(seed, phi):
    """Log characteristic function of ``L(S)`` with ``|S| = 1``."""
    return seed.cumulant(phi)


# ---------------------------------------------------------------------------
# NIG law
# ---------------------------------------------------------------------------

def nig_cumulant(phi, p):
    phi = np.asarray(phi, dtype=float)
    a, b = p.alpha_shape, p.beta_asym
    inner = np.sqrt(a * a - (b + 1j * phi) ** 2 + 0j)
    return 1j * p.mu_loc * phi + p.delta_scale * (p.gamma - inner)


def nig_logpdf(x, p):
    """Log density, evaluated with exponentially scaled Bessel functions so that
    far tails neither underflow nor overflow."""
    x = np.asarray(x, dtype=float)
    a, b, mu, d = p.alpha_shape, p.beta_asym, p.mu_loc, p.delta_scale
    y = x - mu
    q = np.hypot(d, y)
    z = a * q
    # K_1(z) = k1e(z) * exp(-z)
    return (math.log(a * d / math.pi) + np.log(special.k1e(z)) - z - np.log(q)
            + d * p.gamma + b * y)


def nig_pdf(x, p):
    return np.exp(nig_logpdf(x, p))


def inverse_gaussian_draw(mean, shape, size, rng):
    """Inverse Gaussian variates by the transformation-with-rejection method.

    The smaller root is written as ``mean / (1 + a + sqrt(a^2 + 2a))`` which
    does not cancel when ``shape`` is tiny relative to ``mean`` (small trawl
    cells give exactly that regime).
    """
    y = rng.standard_normal(size)
    y *= y
    a = (0.5 * mean / shape) * y
    x = mean / (1.0 + a + np.sqrt(a * (a + 2.0)))
    u = rng.random(size)
    return np.where(u * (mean + x) <= mean, x, mean * mean / x)


def _nig_draw(p, size, rng):
    g = p.gamma
    v = inverse_gaussian_draw(p.delta_scale / g, p.delta_scale**2, size, rng)
    x = np.sqrt(v) * rng.standard_normal(size)
    x += p.mu_loc + p.beta_asym * v
    return x


def nig_sample(p, n, rng_seed, stream_id=0):
    """``n`` i.i.d. NIG draws; a normal mean-variance mixture over an inverse
    Gaussian subordinator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _nig_draw(p, int(n), stream(rng_seed, 0x4E49, stream_id))


def nig_moment_estimate(samples):
    """Invert mean, variance, skewness and excess kurtosis into NIG parameters.

    Raises :class:`FitInfeasible` when the sample moments violate
    ``3 * excess_kurtosis > 4 * skewness**2``; the exception carries an
    estimate with the skewness shrunk into the feasible region.
    """
    x = np.asarray(samples, dtype=float)
    m = float(np.mean(x))
    v = float(np.var(x))
    if not v > 0:
        raise FitInfeasible("sample variance is zero")
    s = float(stats.skew(x))
    # near-Gaussian data: floor the kurtosis, the MLE then drifts towards large alpha
    k = max(float(stats.kurtosis(x)), 1e-2)
    feasible = 3.0 * k > 4.0 * s * s
    if not feasible:
        s = math.copysign(math.sqrt(0.7 * k), s)
    zeta = 3.0 / (k - 4.0 * s * s / 3.0)
    rho = math.copysign(min(math.sqrt(s * s * zeta / 9.0), 0.99), s)
    gam = math.sqrt(zeta / (v * (1.0 - rho * rho)))
    alpha = gam / math.sqrt(1.0 - rho * rho)
    beta = rho * alpha
    delta = zeta / gam
    est = NIGParams(alpha, beta, m - delta * beta / gam, delta)
    if not feasible:
        raise FitInfeasible("sample skewness/kurtosis outside the NIG region", est)
    return est


def _nig_negloglik(theta, y):
    # theta = (log alpha, atanh(beta/alpha), mu, log delta)
    la, t, mu, ld = theta
    a, rho, d = math.exp(la), math.tanh(t), math.exp(ld)
    b = a * rho
    g = a * math.sqrt(1.0 - rho * rho)
    r = y - mu
    q2 = d * d + r * r
    q = np.sqrt(q2)
    z = a * q
    k1 = special.k1e(z)
    k0 = special.k0e(z)
    ll = (la + ld - math.log(math.pi) + np.log(k1) - z - np.log(q) + d * g + b * r)
    ratio = k0 / k1
    n = y.size
    # partial derivatives of the summed log-likelihood
    d_alpha = float(np.sum(-q * ratio)) + n * d * a / g
    d_beta = n * (-d * b / g) + float(np.sum(r))
    d_mu = float(np.sum(a * ratio * r / q + 2.0 * r / q2)) - n * b
    d_delta = n * (1.0 / d + g) - float(np.sum(a * ratio * d / q + 2.0 * d / q2))
    grad = np.array([
        a * (d_alpha + rho * d_beta),
        a * (1.0 - rho * rho) * d_beta,
        d_mu,
        d * d_delta,
    ])
    return -float(np.sum(ll)), -grad


def nig_fit(samples, maxiter=500, rtol=1e-10):
    """Maximum-likelihood NIG fit started from the moment estimate.

    The data are standardised internally for conditioning and the optimum is
    mapped back. Raises :class:`FitInfeasible` (with a moment-only estimate
    attached) when the starting moments are outside the NIG region.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 1000:
        raise ValueError("nig_fit needs at least 1000 samples")
    loc, scale = float(np.mean(x)), float(np.std(x))
    if not scale > 0:
        raise FitInfeasible("sample variance is zero")
    y = (x - loc) / scale
    start = nig_moment_estimate(y)
    a0 = min(start.alpha_shape, 1e3)
    theta0 = np.array([math.log(a0), math.atanh(start.beta_asym / start.alpha_shape),
                       start.mu_loc, math.log(start.delta_scale)])
    res = optimize.minimize(
        _nig_negloglik, theta0, args=(y,), jac=True, method="L-BFGS-B",
        bounds=[(-10, 12), (-8, 8), (None, None), (-20, 20)],
        options={"maxiter": maxiter, "ftol": rtol, "gtol": 1e-9},
    )
    la, t, mu, ld = res.x
    a = math.exp(la)
    fitted = NIGParams(a, a * math.tanh(t), mu, math.exp(ld))
    return fitted.rescaled(loc, scale)


# ---------------------------------------------------------------------------
# symmetric stable law
# ---------------------------------------------------------------------------

def _standard_stable(alpha, size, rng):
    """Chambers-Mallows-Stuck draws with characteristic function exp(-|phi|^alpha)."""
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))


def stable_sample(p, n, rng_seed, stream_id=0):
    if n < 1:
        raise ValueError("n must be >= 1")
    g = stream(rng_seed, 0x5354, stream_id)
    return p.gamma_scale ** (1.0 / p.alpha_stab) * _standard_stable(p.alpha_stab, int(n), g)


def stable_abs_moment(p_exp, p):
    """Closed-form ``E|X|^p`` for the symmetric stable law, ``0 < p < alpha``."""
    a = p.alpha_stab
    if not 0 < p_exp < a:
        raise ValueError("fractional moment order must lie in (0, alpha)")
    return (2.0**p_exp * special.gamma(0.5 * (1.0 + p_exp)) * special.gamma(1.0 - p_exp / a)
            / (math.sqrt(math.pi) * special.gamma(1.0 - 0.5 * p_exp))
            * p.gamma_scale ** (p_exp / a))
