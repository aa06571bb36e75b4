"""Acceptance suite: one test per criterion, each with its own fixed seed.

Run alone with ``pytest -m acceptance -v``; the terminal summary lists one
PASS/FAIL line per criterion followed by the measured values.
"""

import json
import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from incsim import analysis, cli
from incsim.analysis import AnalysisConfig, batch_means_se, collapse_distance, decorrelation_block, increments
from incsim.bssprime import (AbsGaussRoot, BssPrimeSpec, LogTrawl, bssprime_variogram_formula,
                             bssprime_variogram_mc, simulate_components, variogram_first_principles,
                             vol_moments)
from incsim.distributions import GaussianSeed, NIGParams, NIGSeed, StableParams, nig_fit
from incsim.gaussian_process import Exponential, PowerDecay, StretchedExponential, corr_invert, simulate_gaussian
from incsim.lss import ExpKernel, g_hat, g_hat_quad, i_alpha, match_lag_stable, simulate_lss
from incsim.trawl import CorrelationTrawl, ExponentialTrawl, PowerTrawl, TrawlProcessSpec, simulate_trawl

pytestmark = pytest.mark.acceptance


class Clock:
    def __init__(self, limit):
        self.limit, self.t0 = limit, time.perf_counter()

    def check(self, detail):
        used = time.perf_counter() - self.t0
        detail(f"runtime {used:.1f} s (limit {self.limit} s)")
        assert used < self.limit


@pytest.mark.criterion(1, "trawl cumulant identity")
def test_trawl_cumulant_identity(detail):
    clock = Clock(120)
    spec = TrawlProcessSpec(ExponentialTrawl(1.0), GaussianSeed(), dt=0.01)
    x = simulate_trawl(spec, 2**20, rng_seed=1).values
    var = float(np.var(x))
    detail(f"marginal variance {var:.4f} (target 1, tol 3%)")
    assert abs(var - 1.0) < 0.03
    for u in (0.1, 0.5, 1.0, 2.0):
        m = int(round(u / 0.01))
        d = x[m:] - x[:-m]
        want = 2 * (1 - math.exp(-u))
        got = float(np.mean(d * d))
        detail(f"u={u}: increment variance {got:.4f} vs {want:.4f} (rel {got / want - 1:+.4f}, tol 5%)")
        assert abs(got / want - 1) < 0.05
    clock.check(detail)


def _levels_report(datasets, rs, **kw):
    cfg = AnalysisConfig(fit_nig=False, **kw)
    return analysis.is_report(datasets, [2 * (1 - r) for r in rs], cfg)


@pytest.mark.criterion(2, "trawl extIS collapse (exponential vs power trawl)")
def test_trawl_extis_collapse(detail):
    clock = Clock(300)
    seed = NIGSeed(NIGParams(1.0, 0.0, 0.0, 1.0))
    dt, n = 0.05, 2**21
    exp_ts = simulate_trawl(TrawlProcessSpec(ExponentialTrawl(1.0), seed, dt), n, rng_seed=2, stream_id=0)
    pow_ts = simulate_trawl(TrawlProcessSpec(PowerTrawl(1.0, 2.0), seed, dt), n, rng_seed=2, stream_id=1)
    rs = (0.9, 0.75, 0.6, 0.45, 0.3)
    rep = _levels_report([exp_ts, pow_ts], rs)
    assert not rep.failures and len(rep.matches) == 5
    for m in rep.matches:
        detail(f"level {m.target:.3f}: lags {m.lag_i:.3f} / {m.lag_j:.3f}, thinned KS {m.ks:.4f} (tol 0.03)")
    assert all(m.ks < 0.03 for m in rep.matches)

    # unequal areas: the power trawl shrunk to area 0.1
    small = simulate_trawl(TrawlProcessSpec(PowerTrawl(1.0, 2.0, amplitude=0.1), seed, dt), 2**19,
                           rng_seed=2, stream_id=2)
    neg = _levels_report([exp_ts, small], rs)
    worst = max(m.ks for m in neg.matches)
    detail(f"negative control (areas 1 vs 0.1): max KS {worst:.4f} (need > 0.1)")
    assert worst > 0.1
    clock.check(detail)


@pytest.mark.criterion(3, "NIG closure of the trawl marginal")
def test_nig_closure(detail):
    clock = Clock(180)
    seed_p = NIGParams(1.5, 0.0, 0.0, 0.5)
    tset = ExponentialTrawl(1.0, amplitude=2.0)
    x = simulate_trawl(TrawlProcessSpec(tset, NIGSeed(seed_p), dt=0.1), 2**20, rng_seed=3).values
    fit = nig_fit(x)
    want = tset.area * seed_p.delta_scale
    detail(f"fitted delta {fit.delta_scale:.4f} vs |A| delta_seed = {want} (tol 10%)")
    detail(f"fitted beta {fit.beta_asym:+.4f} (need |beta| < 0.1)")
    assert abs(fit.delta_scale / want - 1) < 0.10
    assert abs(fit.beta_asym) < 0.1
    clock.check(detail)


@pytest.mark.criterion(4, "stable increment functional: closed form vs quadrature")
def test_g_hat_closed_form(detail):
    clock = Clock(10)
    g, alpha = ExpKernel(1.0, 1.0), 1.5
    for u in (0.01, 0.1, 1.0, 10.0):
        a, b = g_hat(g, alpha, u), g_hat_quad(g, alpha, u)
        detail(f"u={u}: rel err {abs(a - b) / b:.2e} (tol 1e-8)")
        assert abs(a - b) < 1e-8 * b
    lim = g_hat(g, alpha, 50.0 / g.lambda_rate)
    rel = abs(lim / (2 * i_alpha(g, alpha)) - 1)
    detail(f"g_hat(50/lambda) vs 2 I_alpha: rel {rel:.2e} (tol 1e-6)")
    assert rel < 1e-6
    clock.check(detail)


@pytest.mark.criterion(5, "stable moving-average IS matching")
def test_stable_is_matching(detail):
    clock = Clock(300)
    alpha, p, dt, n = 1.5, StableParams(1.5, 1.0), 0.01, 10**6
    g = ExpKernel(1.0, 1.0)
    h = ExpKernel(2.0 ** (1 / alpha), 2.0)
    xg = simulate_lss(g, p, n, dt, rng_seed=5, stream_id=0)
    xh = simulate_lss(h, p, n, dt, rng_seed=5, stream_id=1)
    for u in (0.1, 0.5, 1.0, 2.0):
        v = match_lag_stable(g, h, alpha, u)
        mu, mv = int(round(u / dt)), int(round(v / dt))
        assert abs(mv * dt - v) < 1e-9
        du, dv = increments(xg, mu), increments(xh, mv)
        fu, fv = np.mean(np.abs(du) ** 0.75), np.mean(np.abs(dv) ** 0.75)
        detail(f"u={u}, v={v:.4f}: E|d|^0.75 {fu:.4f} vs {fv:.4f} (rel {fv / fu - 1:+.4f}, tol 5%)")
        assert abs(fv / fu - 1) < 0.05
        for kern, d, lag in ((g, du, u), (h, dv, v)):
            c = np.cos(d)
            want = math.exp(-p.gamma_scale * g_hat(kern, alpha, lag))
            z = (c.mean() - want) / batch_means_se(c)
            detail(f"  ECF at phi=1, lag {lag:.3f}: {c.mean():.5f} vs {want:.5f} (z {z:+.2f}, tol 4)")
            assert abs(z) < 4
    clock.check(detail)


@pytest.mark.criterion(6, "Gaussian extIS: exponential vs stretched exponential")
def test_gaussian_extis(detail):
    clock = Clock(120)
    r1, r2 = Exponential(1.0), StretchedExponential(1.0, 0.5)
    n, k = 2**20, 16
    for i, level in enumerate((0.8, 0.5, 0.2)):
        u, v = corr_invert(r1, level), corr_invert(r2, level)
        a = simulate_gaussian(r1, n, u / k, rng_seed=6, stream_id=2 * i)
        b = simulate_gaussian(r2, n, v / k, rng_seed=6, stream_id=2 * i + 1)
        da, db = increments(a, k), increments(b, k)
        ratio = float(np.mean(db * db) / np.mean(da * da))
        dist = collapse_distance(da, db, (decorrelation_block(da), decorrelation_block(db)))
        detail(f"r={level}: u={u:.4f}, v={v:.4f}, variance ratio {ratio:.4f} (tol 3%), "
               f"thinned KS {dist.ks:.4f} on {dist.n_a}/{dist.n_b} (tol 0.02)")
        assert min(dist.n_a, dist.n_b) >= 10**4
        assert abs(ratio - 1) < 0.03
        assert dist.ks < 0.02
    clock.check(detail)


def _flagship_spec(corr):
    seed = NIGSeed(NIGParams(6.0, 0.0, 0.0, 0.36))
    vol = LogTrawl(TrawlProcessSpec(CorrelationTrawl(corr, 1.0), seed))
    return BssPrimeSpec(0.0, 1.0, corr, vol)


@pytest.mark.criterion(7, "BSS' flagship: paired log-trawl volatility")
def test_bssprime_flagship(detail):
    clock = Clock(600)
    r1, r2 = Exponential(1.0), PowerDecay(1.0, 2.0)
    s1, s2 = _flagship_spec(r1), _flagship_spec(r2)

    # matched lags: v on the r2 grid, u = r1^-1(r2(v)) with its own step
    dt2, n, k = 0.02, 2**22, 8
    y2, _, _ = simulate_components(s2, n, dt2, rng_seed=7, stream_id=1)
    for i, steps in enumerate((4, 16, 40)):
        v = steps * dt2
        u = corr_invert(r1, float(r2(v)))
        y1, _, _ = simulate_components(s1, 2**21, u / k, rng_seed=7, stream_id=10 + i)
        a, b = y1[k:] - y1[:-k], y2[steps:] - y2[:-steps]
        dist = collapse_distance(a, b, (decorrelation_block(a), decorrelation_block(b)))
        detail(f"r={float(r2(v)):.3f}: u={u:.4f}, v={v:.2f}, thinned KS {dist.ks:.4f} (tol 0.03)")
        assert dist.ks < 0.03

    # aggregational Gaussianity along 8 dyadic lags
    dt = 0.02
    y, _, _ = simulate_components(s1, 2**23, dt, rng_seed=7, stream_id=0)
    kurt = [float(stats.kurtosis(y[2**j:] - y[: -2**j])) for j in range(8)]
    detail("excess kurtosis at lags " + ", ".join(f"{dt * 2**j:g}:{kv:.3f}" for j, kv in enumerate(kurt)))
    assert all(b < a for a, b in zip(kurt, kurt[1:]))
    assert kurt[-1] < 0.3
    clock.check(detail)


@pytest.mark.criterion(8, "BSS' variogram adjudication (|Z|^(1/2) volatility)")
def test_variogram_adjudication(detail):
    clock = Clock(300)
    r = Exponential(1.0)
    spec = BssPrimeSpec(0.0, 0.1, r, AbsGaussRoot(r))
    levels = (0.8, 0.5, 0.2)
    lags = [corr_invert(r, lv) for lv in levels] + [0.05, 3.0]
    kw = dict(n=2**18, dt=0.01)
    t1 = bssprime_variogram_mc(spec, lags, 16, rng_seed=81, **kw)
    t2 = bssprime_variogram_mc(spec, lags, 16, rng_seed=82, **kw)
    for u, a, sa, b, sb in zip(t1.lags, t1.mean, t1.se, t2.mean, t2.se):
        z = (a - b) / math.hypot(sa, sb)
        detail(f"u={u:.2f}: seed sets {a:.5f} / {b:.5f}, z {z:+.2f} (tol 4)")
        assert abs(z) < 4
    pooled = (t1.mean + t2.mean) / 2
    pooled_se = np.hypot(t1.se, t2.se) / 2
    for j in range(len(levels)):
        u = float(t1.lags[j])
        m = vol_moments(spec.vol, u)
        fp = variogram_first_principles(spec, u, m)
        pub = bssprime_variogram_formula(spec, u, m)
        zf = (fp - pooled[j]) / pooled_se[j]
        zp = (pub - pooled[j]) / pooled_se[j]
        detail(f"r(u)={float(r(u)):.3f}: MC {pooled[j]:.5f} +- {pooled_se[j]:.5f}; first principles {fp:.5f} "
               f"(z {zf:+.2f}); published form {pub:.5f} (z {zp:+.2f}, deviation {pub - pooled[j]:+.5f})")
        assert abs(zf) < 4
    clock.check(detail)


@pytest.mark.criterion(9, "pipeline end to end (cmd_analyze on a 4-member family)")
def test_pipeline_end_to_end(tmp_path, detail):
    clock = Clock(600)
    lams = (0.5, 1.0, 2.0, 4.0)
    rs = np.linspace(0.9, 0.3, 12)
    inputs = []
    for i, lam in enumerate(lams):
        cfg = {"schema_version": 1, "rng_seed": 9, "stream_id": i, "n": 2**22, "dt": 0.02 / lam,
               "output": f"member{i}.bin",
               "process": {"family": "trawl", "set": {"kind": "exponential", "lambda_rate": lam, "amplitude": lam},
                           "seed": {"kind": "nig", "alpha_shape": 1.0, "delta_scale": 1.0}}}
        path = tmp_path / f"sim{i}.json"
        path.write_text(json.dumps(cfg))
        assert cli.main(["simulate", "--config", str(path), "--output-dir", str(tmp_path / "data")]) == 0
        inputs.append(f"data/member{i}.bin")
    acfg = {"schema_version": 1, "inputs": inputs, "targets": [float(2 * (1 - r)) for r in rs]}
    (tmp_path / "analyze.json").write_text(json.dumps(acfg))
    outs = [tmp_path / "run1", tmp_path / "run2"]
    for out in outs:
        assert cli.main(["analyze", "--config", str(tmp_path / "analyze.json"), "--output-dir", str(out)]) == 0

    report = json.loads((outs[0] / "report.json").read_text())
    matches = report["matches"]
    assert report["collapse"] and not report["failures"]
    assert len(matches) == 3 * len(rs)
    worst_ks = max(m["ks"] for m in matches)
    worst_r = max(abs(math.exp(-lams[m["pair"][1]] * m["lag_j"]) / math.exp(-lams[0] * m["lag_i"]) - 1)
                  for m in matches)
    detail(f"{len(matches)} matches, max KS {worst_ks:.4f} (tol 0.03), max r-map error {worst_r:.4f} (tol 2%)")
    assert worst_ks < 0.03
    assert worst_r < 0.02

    names = sorted(os.listdir(outs[0]))
    assert names == sorted(os.listdir(outs[1]))
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in names)
    detail(f"rerun byte-identical across {len(names)} files: {same}")
    assert same
    clock.check(detail)
