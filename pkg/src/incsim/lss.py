"""Moving averages of a symmetric alpha-stable Lévy process,
``X_t = ∫_{-inf}^t g(t - s) dL_s``.

Within a class of kernels sharing ``I_alpha(g) = ∫ g^alpha`` the increment
laws can be paired lag by lag (:func:`match_lag_stable`). The joint law of
``(X_t, X_{t+u})`` generally cannot, and :func:`lss_joint_cumulant` is provided
so that mismatch can be measured rather than assumed.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, optimize, signal

from .distributions import _standard_stable
from .errors import Divergent, NotMatchable, ResourceLimit
from .gaussian_process import TimeSeries
from .rng import stream

MAX_TAPS = 10**7
_QUAD = dict(epsabs=1e-10, epsrel=1e-12, limit=500)


class Kernel:
    """Positive kernel on ``[0, inf)``, continuous and strictly decreasing to 0."""

    def __call__(self, s):
        raise NotImplementedError

    def power_integral(self, alpha, a, b):
        """``∫_a^b g(s)^alpha ds`` for ``0 <= a <= b <= inf``."""
        return integrate.quad(lambda s: self(s) ** alpha, a, b, **_QUAD)[0]

    def check_integrable(self, alpha):
        pass


@dataclass(frozen=True)
class ExpKernel(Kernel):
    c_amp: float = 1.0
    lambda_rate: float = 1.0

    def __post_init__(self):
        if not (self.c_amp > 0 and self.lambda_rate > 0):
            raise ValueError("c_amp and lambda_rate must be > 0")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.c_amp * np.exp(-self.lambda_rate * np.maximum(s, 0.0)), 0.0)

    def power_integral(self, alpha, a, b):
        k = alpha * self.lambda_rate
        upper = 0.0 if math.isinf(b) else math.exp(-k * b)
        return self.c_amp**alpha * (math.exp(-k * a) - upper) / k


@dataclass(frozen=True)
class PowerKernel(Kernel):
    """``c (1 + lambda s)^(-nu)``; ``I_alpha`` is finite only when ``alpha nu > 1``."""

    c_amp: float = 1.0
    lambda_rate: float = 1.0
    nu_exp: float = 2.0

    def __post_init__(self):
        if not (self.c_amp > 0 and self.lambda_rate > 0 and self.nu_exp > 0):
            raise ValueError("c_amp, lambda_rate and nu_exp must be > 0")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.c_amp * (1.0 + self.lambda_rate * np.maximum(s, 0.0)) ** (-self.nu_exp), 0.0)

    def check_integrable(self, alpha):
        if alpha * self.nu_exp <= 1:
            raise Divergent(f"I_alpha diverges: alpha * nu = {alpha * self.nu_exp} <= 1")

    def power_integral(self, alpha, a, b):
        self.check_integrable(alpha)
        e = alpha * self.nu_exp - 1.0
        upper = 0.0 if math.isinf(b) else (1.0 + self.lambda_rate * b) ** (-e)
        return self.c_amp**alpha * ((1.0 + self.lambda_rate * a) ** (-e) - upper) / (self.lambda_rate * e)


def i_alpha(g, alpha):
    """``∫_0^inf g(s)^alpha ds``."""
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    g.check_integrable(alpha)
    return g.power_integral(alpha, 0.0, math.inf)


def _g_hat_exp(g, alpha, u):
    lam = g.lambda_rate
    return g.c_amp**alpha * (1.0 - math.exp(-alpha * lam * u) + (1.0 - math.exp(-lam * u)) ** alpha) / (alpha * lam)


def g_hat_quad(g, alpha, u):
    """Increment scale functional by two-piece quadrature: the part ``0 < s < u``
    where ``g(-s) = 0`` and the difference of tails for ``s <= 0``."""
    if u == 0:
        return 0.0
    near = integrate.quad(lambda s: g(s) ** alpha, 0.0, u, **_QUAD)[0]
    far = integrate.quad(lambda w: np.abs(g(w + u) - g(w)) ** alpha, 0.0, math.inf, **_QUAD)[0]
    return near + far


def g_hat(g, alpha, u):
    """``ĝ(u; alpha) = ∫_{-inf}^u |g(u - s) - g(-s)|^alpha ds``; the increment
    ``X_{t+u} - X_t`` has cumulant ``-gamma |phi|^alpha ĝ(u; alpha)``."""
    if u < 0:
        raise ValueError("lag must be >= 0")
    g.check_integrable(alpha)
    if u == 0:
        return 0.0
    if isinstance(g, ExpKernel):
        return _g_hat_exp(g, alpha, u)
    # for a decreasing kernel the tail difference keeps its sign
    near = g.power_integral(alpha, 0.0, u)
    far = integrate.quad(lambda w: (g(w) - g(w + u)) ** alpha, 0.0, math.inf, **_QUAD)[0]
    return near + far


def lss_joint_cumulant(g, p, phi, psi, u):
    """Cumulant function of ``(X_t, X_{t+u})`` at ``(phi, psi)``:

        -gamma |psi|^alpha ∫_0^u g^alpha - gamma ∫_0^inf |phi g(w) + psi g(w + u)|^alpha dw.

    When ``phi`` and ``psi`` have opposite signs the integrand has a kink where
    ``phi g(w) + psi g(w + u)`` crosses zero; quadrature is split there.
    """
    a, gam = p.alpha_stab, p.gamma_scale
    near = abs(psi) ** a * g.power_integral(a, 0.0, u)

    def f(w):
        return abs(phi * float(g(w)) + psi * float(g(w + u))) ** a

    breaks = [0.0]
    h = lambda w: phi * float(g(w)) + psi * float(g(w + u))
    if phi * psi < 0:
        hi = 1.0
        while hi < 1e6 and np.sign(h(hi)) == np.sign(h(0.0)):
            hi *= 2.0
        if np.sign(h(hi)) != np.sign(h(0.0)):
            breaks.append(optimize.brentq(h, 0.0, hi, xtol=1e-14))
    far = 0.0
    pts = breaks + [math.inf]
    for lo, hi in zip(pts[:-1], pts[1:]):
        far += integrate.quad(f, lo, hi, **_QUAD)[0]
    return -gam * (near + far)


def _check_monotone(g, alpha, lo, hi, points=64):
    u = np.linspace(lo, hi, points)
    vals = np.array([g_hat(g, alpha, x) for x in u])
    if np.any(np.diff(vals) <= 0):
        raise NotMatchable("ĝ is not strictly increasing on the search bracket")


def match_lag_stable(g, h, alpha, u, rtol_class=1e-9):
    """Lag ``v`` with ``ĥ(v) = ĝ(u)`` for kernels of equal ``I_alpha``."""
    if not u > 0:
        raise ValueError("u must be > 0")
    ig, ih = i_alpha(g, alpha), i_alpha(h, alpha)
    if abs(ig - ih) > rtol_class * max(ig, ih):
        raise NotMatchable(f"kernels differ in I_alpha ({ig} vs {ih})")
    target = g_hat(g, alpha, u)
    if target >= 2.0 * ih - 1e-12:
        raise NotMatchable("target at or above the supremum 2 I_alpha(h)")
    hi = u
    while g_hat(h, alpha, hi) < target:
        hi *= 2.0
    lo = 0.0
    _check_monotone(h, alpha, lo, hi)
    return optimize.brentq(lambda v: g_hat(h, alpha, v) - target, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def fractional_moment(samples, p):
    """Mean of ``|x|^p``."""
    if not p > 0:
        raise ValueError("p must be > 0")
    return float(np.mean(np.abs(np.asarray(samples, dtype=float)) ** p))


def kernel_taps(g, alpha, dt, tail_rtol=1e-6):
    """Cell weights ``w_j = (∫_{j dt}^{(j+1) dt} g^alpha / dt)^(1/alpha)``.

    With these weights ``dt * sum w_j^alpha`` reproduces ``I_alpha`` up to the
    truncated tail, and for exponential kernels the increment functional is
    reproduced exactly at grid lags."""
    total = i_alpha(g, alpha)
    # smallest K with tail beyond K dt below tail_rtol * total
    hi = 1
    while g.power_integral(alpha, hi * dt, math.inf) > tail_rtol * total:
        hi *= 2
        if hi > 4 * MAX_TAPS:
            raise ResourceLimit(f"kernel truncation exceeds {MAX_TAPS} taps")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if g.power_integral(alpha, mid * dt, math.inf) > tail_rtol * total:
            lo = mid
        else:
            hi = mid
    if hi > MAX_TAPS:
        raise ResourceLimit(f"kernel truncation needs {hi} taps (limit {MAX_TAPS})")
    edges = np.arange(hi + 1) * dt
    if isinstance(g, (ExpKernel, PowerKernel)):
        cell = _cell_integrals_vectorised(g, alpha, edges)
    else:
        cell = np.array([g.power_integral(alpha, a, b) for a, b in zip(edges[:-1], edges[1:])])
    return (np.clip(cell, 0.0, None) / dt) ** (1.0 / alpha)


def _cell_integrals_vectorised(g, alpha, edges):
    if isinstance(g, ExpKernel):
        k = alpha * g.lambda_rate
        return g.c_amp**alpha * np.exp(-k * edges[:-1]) * (-np.expm1(-k * (edges[1] - edges[0]))) / k
    e = alpha * g.nu_exp - 1.0
    lam = g.lambda_rate
    tails = g.c_amp**alpha * (1.0 + lam * edges) ** (-e) / (lam * e)
    return tails[:-1] - tails[1:]


def simulate_lss(g, p, n, dt, rng_seed, stream_id=0):
    """Grid path of the stable moving average.

    Innovations are i.i.d. symmetric stable with cumulant ``-gamma dt |phi|^alpha``
    per step; the kernel is truncated where the remaining ``I_alpha`` tail is
    below 1e-6 of the total."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    taps = kernel_taps(g, p.alpha_stab, dt)
    k = taps.size
    rng = stream(rng_seed, 0x4C53, stream_id)
    scale = (p.gamma_scale * dt) ** (1.0 / p.alpha_stab)
    z = scale * _standard_stable(p.alpha_stab, n + k - 1, rng)
    x = signal.oaconvolve(z, taps, mode="valid")
    return TimeSeries(x, dt)
