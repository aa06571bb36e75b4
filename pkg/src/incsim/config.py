"""Strict JSON run configurations.

Every block is checked against a fixed set of keys so that a misspelt field
is reported instead of silently falling back to a default. Parsed configs are
plain dicts with defaults filled in; :func:`dump_config` writes them back so
that ``load(dump(cfg)) == cfg``.
"""

import json
import math

from .distributions import GaussianSeed, NIGParams, NIGSeed, StableParams
from .errors import ConfigError
from .gaussian_process import Exponential, PowerDecay, StretchedExponential
from .lss import ExpKernel, PowerKernel
from .trawl import CorrelationTrawl, ExponentialTrawl, PowerTrawl, TrawlProcessSpec

SCHEMA_VERSION = 1
REQUIRED = object()


def _block(d, path, spec):
    """Check ``d`` against ``spec`` (key -> default or REQUIRED) and fill defaults."""
    if not isinstance(d, dict):
        raise ConfigError("expected an object", path or "<root>")
    for key in d:
        if key not in spec:
            raise ConfigError(f"unknown field (allowed: {', '.join(sorted(spec))})", _join(path, key))
    out = {}
    for key, default in spec.items():
        if key in d:
            out[key] = d[key]
        elif default is REQUIRED:
            raise ConfigError("missing required field", _join(path, key))
        else:
            out[key] = default
    return out


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _num(v, path, lo=None, lo_open=False, integer=False, hi=None, hi_open=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", path)
    if integer and not (isinstance(v, int) or float(v).is_integer()):
        raise ConfigError(f"expected an integer, got {v!r}", path)
    if not math.isfinite(v):
        raise ConfigError("must be finite", path)
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"must be {'>' if lo_open else '>='} {lo}", path)
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(f"must be {'<' if hi_open else '<='} {hi}", path)
    return int(v) if integer else float(v)


def _choice(v, path, options):
    if v not in options:
        raise ConfigError(f"expected one of {sorted(options)}, got {v!r}", path)
    return v


def _num_list(v, path, **kw):
    if not isinstance(v, list):
        raise ConfigError("expected a list", path)
    return [_num(x, f"{path}[{i}]", **kw) for i, x in enumerate(v)]


def _str_list(v, path):
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise ConfigError("expected a list of paths", path)
    return list(v)


# -- process blocks ---------------------------------------------------------

_CORR = {
    "exponential": {"kind": REQUIRED, "lambda_rate": 1.0},
    "stretched_exponential": {"kind": REQUIRED, "lambda_rate": 1.0, "kappa_exp": 0.5},
    "power_decay": {"kind": REQUIRED, "lambda_rate": 1.0, "nu_exp": 2.0},
}


def parse_corr(d, path):
    kind = _choice(d.get("kind") if isinstance(d, dict) else None, _join(path, "kind"), _CORR)
    b = _block(d, path, _CORR[kind])
    lam = _num(b["lambda_rate"], _join(path, "lambda_rate"), lo=0, lo_open=True)
    if kind == "exponential":
        return b, Exponential(lam)
    if kind == "stretched_exponential":
        return b, StretchedExponential(lam, _num(b["kappa_exp"], _join(path, "kappa_exp"), lo=0, lo_open=True, hi=1))
    return b, PowerDecay(lam, _num(b["nu_exp"], _join(path, "nu_exp"), lo=0, lo_open=True))


_SEED = {
    "gaussian": {"kind": REQUIRED, "mean": 0.0, "variance": 1.0},
    "nig": {"kind": REQUIRED, "alpha_shape": REQUIRED, "beta_asym": 0.0, "mu_loc": 0.0, "delta_scale": REQUIRED},
}


def parse_seed(d, path):
    kind = _choice(d.get("kind") if isinstance(d, dict) else None, _join(path, "kind"), _SEED)
    b = _block(d, path, _SEED[kind])
    if kind == "gaussian":
        return b, GaussianSeed(_num(b["mean"], _join(path, "mean")),
                               _num(b["variance"], _join(path, "variance"), lo=0))
    vals = {k: _num(b[k], _join(path, k)) for k in ("alpha_shape", "beta_asym", "mu_loc", "delta_scale")}
    try:
        return b, NIGSeed(NIGParams(**vals))
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


_TRAWL_SET = {
    "exponential": {"kind": REQUIRED, "lambda_rate": 1.0, "amplitude": 1.0},
    "power": {"kind": REQUIRED, "lambda_rate": 1.0, "nu_exp": 2.0, "amplitude": 1.0},
    "correlation": {"kind": REQUIRED, "corr": REQUIRED, "area": 1.0},
}


def parse_trawl_set(d, path):
    kind = _choice(d.get("kind") if isinstance(d, dict) else None, _join(path, "kind"), _TRAWL_SET)
    b = _block(d, path, _TRAWL_SET[kind])
    p = lambda k: _num(b[k], _join(path, k), lo=0, lo_open=True)
    if kind == "exponential":
        return b, ExponentialTrawl(p("lambda_rate"), p("amplitude"))
    if kind == "power":
        return b, PowerTrawl(p("lambda_rate"), _num(b["nu_exp"], _join(path, "nu_exp"), lo=1, lo_open=True),
                             p("amplitude"))
    cb, corr = parse_corr(b["corr"], _join(path, "corr"))
    b["corr"] = cb
    return b, CorrelationTrawl(corr, p("area"))


def parse_process(d, path="process"):
    """Returns ``(normalised block, family, object)``."""
    fam = d.get("family") if isinstance(d, dict) else None
    fams = {
        "gaussian": {"family": REQUIRED, "corr": REQUIRED},
        "trawl": {"family": REQUIRED, "set": REQUIRED, "seed": REQUIRED, "truncation_eps": 1e-6,
                  "lag_resolution": 16},
        "lss": {"family": REQUIRED, "kernel": REQUIRED, "alpha_stab": REQUIRED, "gamma_scale": 1.0},
        "bssprime": {"family": REQUIRED, "mu_loc": 0.0, "beta_coef": 0.0, "corr": REQUIRED, "vol": REQUIRED},
    }
    _choice(fam, _join(path, "family"), fams)
    b = _block(d, path, fams[fam])
    if fam == "gaussian":
        b["corr"], corr = parse_corr(b["corr"], _join(path, "corr"))
        return b, fam, corr
    if fam == "trawl":
        b["set"], tset = parse_trawl_set(b["set"], _join(path, "set"))
        b["seed"], seed = parse_seed(b["seed"], _join(path, "seed"))
        eps = _num(b["truncation_eps"], _join(path, "truncation_eps"), lo=0, lo_open=True, hi=1, hi_open=True)
        res = _num(b["lag_resolution"], _join(path, "lag_resolution"), lo=1, integer=True)
        return b, fam, (tset, seed, eps, res)
    if fam == "lss":
        kb = _block(b["kernel"], _join(path, "kernel"),
                    {"kind": REQUIRED, "c_amp": 1.0, "lambda_rate": 1.0, "nu_exp": 2.0})
        kp = _join(path, "kernel")
        _choice(kb["kind"], _join(kp, "kind"), {"exp", "power"})
        c = _num(kb["c_amp"], _join(kp, "c_amp"), lo=0, lo_open=True)
        lam = _num(kb["lambda_rate"], _join(kp, "lambda_rate"), lo=0, lo_open=True)
        kernel = ExpKernel(c, lam) if kb["kind"] == "exp" else \
            PowerKernel(c, lam, _num(kb["nu_exp"], _join(kp, "nu_exp"), lo=0, lo_open=True))
        b["kernel"] = kb
        alpha = _num(b["alpha_stab"], _join(path, "alpha_stab"), lo=0, lo_open=True, hi=2, hi_open=True)
        gamma = _num(b["gamma_scale"], _join(path, "gamma_scale"), lo=0, lo_open=True)
        return b, fam, (kernel, StableParams(alpha, gamma))
    from .bssprime import AbsGaussRoot, BssPrimeSpec, LogTrawl
    b["corr"], corr = parse_corr(b["corr"], _join(path, "corr"))
    vp = _join(path, "vol")
    kind = _choice(b["vol"].get("kind") if isinstance(b["vol"], dict) else None, _join(vp, "kind"),
                   {"log_trawl", "abs_gauss_root"})
    if kind == "abs_gauss_root":
        b["vol"] = _block(b["vol"], vp, {"kind": REQUIRED})
        vol = AbsGaussRoot(corr)
    else:
        vb = _block(b["vol"], vp, {"kind": REQUIRED, "seed": REQUIRED, "area": 1.0, "truncation_eps": 1e-6})
        vb["seed"], seed = parse_seed(vb["seed"], _join(vp, "seed"))
        area = _num(vb["area"], _join(vp, "area"), lo=0, lo_open=True)
        eps = _num(vb["truncation_eps"], _join(vp, "truncation_eps"), lo=0, lo_open=True, hi=1, hi_open=True)
        b["vol"] = vb
        vol = LogTrawl(TrawlProcessSpec(CorrelationTrawl(corr, area), seed, truncation_eps=eps))
    spec = BssPrimeSpec(_num(b["mu_loc"], _join(path, "mu_loc")), _num(b["beta_coef"], _join(path, "beta_coef")),
                        corr, vol)
    return b, fam, spec


# -- command blocks ---------------------------------------------------------

def _header(d):
    if not isinstance(d, dict):
        raise ConfigError("expected an object", "<root>")
    if "schema_version" not in d:
        raise ConfigError("missing required field", "schema_version")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported version {d['schema_version']!r} (expected {SCHEMA_VERSION})",
                          "schema_version")


def parse_simulate(d):
    _header(d)
    b = _block(d, "", {"schema_version": REQUIRED, "rng_seed": REQUIRED, "n": REQUIRED, "dt": REQUIRED,
                       "stream_id": 0, "process": REQUIRED, "output": "series.csv", "format": None})
    b["rng_seed"] = _num(b["rng_seed"], "rng_seed", lo=0, integer=True)
    b["n"] = _num(b["n"], "n", lo=2, integer=True)
    b["dt"] = _num(b["dt"], "dt", lo=0, lo_open=True)
    b["stream_id"] = _num(b["stream_id"], "stream_id", lo=0, integer=True)
    if not isinstance(b["output"], str) or not b["output"]:
        raise ConfigError("expected a file name", "output")
    if b["format"] is not None:
        _choice(b["format"], "format", {"csv", "binary"})
    b["process"], family, obj = parse_process(b["process"])
    return b, family, obj


_ANALYSIS_KEYS = {"n_targets": 12, "target_span": [0.05, 0.95], "statistic": "variance", "p_frac": None,
                  "lags_per_octave": 8, "max_lag_fraction": 0.25, "match_tolerance": 0.01, "ks_threshold": 0.03,
                  "bins": 100, "thinning_threshold": 0.05, "fit_nig": True, "fit_max_samples": 200_000}


def parse_analysis_block(d, path="analysis"):
    from .analysis import AnalysisConfig
    b = _block(d, path, _ANALYSIS_KEYS)
    p = lambda k: _join(path, k)
    b["n_targets"] = _num(b["n_targets"], p("n_targets"), lo=1, integer=True)
    b["target_span"] = _num_list(b["target_span"], p("target_span"), lo=0, hi=1)
    if len(b["target_span"]) != 2 or not b["target_span"][0] < b["target_span"][1]:
        raise ConfigError("expected [lo, hi] with lo < hi", p("target_span"))
    _choice(b["statistic"], p("statistic"), {"variance", "fractional"})
    if b["p_frac"] is not None:
        b["p_frac"] = _num(b["p_frac"], p("p_frac"), lo=0, lo_open=True)
    elif b["statistic"] == "fractional":
        raise ConfigError("required when statistic is 'fractional'", p("p_frac"))
    b["lags_per_octave"] = _num(b["lags_per_octave"], p("lags_per_octave"), lo=1, integer=True)
    b["max_lag_fraction"] = _num(b["max_lag_fraction"], p("max_lag_fraction"), lo=0, lo_open=True, hi=1, hi_open=True)
    for k in ("match_tolerance", "ks_threshold", "thinning_threshold"):
        b[k] = _num(b[k], p(k), lo=0, lo_open=True)
    b["bins"] = _num(b["bins"], p("bins"), lo=1, integer=True)
    b["fit_max_samples"] = _num(b["fit_max_samples"], p("fit_max_samples"), lo=1000, integer=True)
    if not isinstance(b["fit_nig"], bool):
        raise ConfigError("expected true or false", p("fit_nig"))
    cfg = AnalysisConfig(**{**b, "target_span": tuple(b["target_span"])})
    return b, cfg


def _inputs(b, need):
    b["inputs"] = _str_list(b["inputs"], "inputs")
    if len(b["inputs"]) < need:
        raise ConfigError(f"at least {need} input files are required", "inputs")


def parse_analyze(d):
    _header(d)
    b = _block(d, "", {"schema_version": REQUIRED, "inputs": REQUIRED, "targets": None, "analysis": {},
                       "report": "report.json"})
    _inputs(b, 2)
    if b["targets"] is not None:
        b["targets"] = _num_list(b["targets"], "targets", lo=0, lo_open=True)
    b["analysis"], cfg = parse_analysis_block(b["analysis"])
    return b, cfg


def parse_fit_nig(d):
    _header(d)
    b = _block(d, "", {"schema_version": REQUIRED, "input": REQUIRED, "lag_steps": REQUIRED, "standardize": True,
                       "bins": 100, "max_samples": 200_000})
    if not isinstance(b["input"], str):
        raise ConfigError("expected a path", "input")
    b["lag_steps"] = _num_list(b["lag_steps"], "lag_steps", lo=1, integer=True)
    if not b["lag_steps"]:
        raise ConfigError("lag ladder is empty", "lag_steps")
    if not isinstance(b["standardize"], bool):
        raise ConfigError("expected true or false", "standardize")
    b["bins"] = _num(b["bins"], "bins", lo=1, integer=True)
    b["max_samples"] = _num(b["max_samples"], "max_samples", lo=1000, integer=True)
    return b


def parse_match(d):
    _header(d)
    b = _block(d, "", {"schema_version": REQUIRED, "inputs": REQUIRED, "targets": None, "n_targets": 12,
                       "statistic": "variance", "p_frac": None, "lags_per_octave": 8, "standardize": True})
    _inputs(b, 2)
    if len(b["inputs"]) != 2:
        raise ConfigError("exactly two inputs are required", "inputs")
    if b["targets"] is not None:
        b["targets"] = _num_list(b["targets"], "targets", lo=0, lo_open=True)
    b["n_targets"] = _num(b["n_targets"], "n_targets", lo=1, integer=True)
    _choice(b["statistic"], "statistic", {"variance", "fractional"})
    if b["statistic"] == "fractional":
        if b["p_frac"] is None:
            raise ConfigError("required when statistic is 'fractional'", "p_frac")
        b["p_frac"] = _num(b["p_frac"], "p_frac", lo=0, lo_open=True)
    b["lags_per_octave"] = _num(b["lags_per_octave"], "lags_per_octave", lo=1, integer=True)
    if not isinstance(b["standardize"], bool):
        raise ConfigError("expected true or false", "standardize")
    return b


PARSERS = {"simulate": parse_simulate, "analyze": parse_analyze, "fit-nig": parse_fit_nig, "match": parse_match}


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def dump_config(cfg):
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"
