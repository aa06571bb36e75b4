"""``incsim`` command line: simulate, analyze, fit-nig, match.

Exit status is 0 on success, 2 for configuration problems and 3 when a
computation fails.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import analysis, config, io
from .distributions import nig_logpdf, NIGParams
from .errors import ConfigError, IncsimError, TargetOutOfRange

log = logging.getLogger("incsim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class RuntimeFailure(Exception):
    pass


def _resolve(path, base):
    return path if os.path.isabs(path) else os.path.join(base, path)


def _require_files(paths, base, field):
    out = []
    for k, p in enumerate(paths):
        full = _resolve(p, base)
        if not os.path.isfile(full):
            raise ConfigError(f"no such file: {full}", f"{field}[{k}]" if len(paths) > 1 else field)
        out.append(full)
    return out


def _write_config(cfg, outdir, name):
    with open(os.path.join(outdir, name), "w") as fh:
        fh.write(config.dump_config(cfg))


def cmd_simulate(cfg, outdir, threads=1, base="."):
    from .bssprime import simulate_bssprime
    from .gaussian_process import simulate_gaussian
    from .lss import simulate_lss
    from .trawl import TrawlProcessSpec, simulate_trawl

    b, family, obj = config.parse_simulate(cfg)
    n, dt, seed, sid = b["n"], b["dt"], b["rng_seed"], b["stream_id"]
    try:
        if family == "gaussian":
            ts = simulate_gaussian(obj, n, dt, seed, sid)
        elif family == "trawl":
            tset, lseed, eps, res = obj
            ts = simulate_trawl(TrawlProcessSpec(tset, lseed, dt, eps, res), n, seed, sid, threads=threads)
        elif family == "lss":
            kernel, params = obj
            ts = simulate_lss(kernel, params, n, dt, seed, sid)
        else:
            ts = simulate_bssprime(obj, n, dt, seed, sid, threads=threads)
    except (IncsimError, ValueError) as exc:
        raise RuntimeFailure(f"{type(exc).__name__}: {exc}") from None
    path = os.path.join(outdir, b["output"])
    io.write_series(ts, path, b["format"])
    _write_config(b, outdir, "simulate.config.json")
    v = ts.values
    return {"path": path, "family": family, "n": int(v.size), "dt": ts.dt, "mean": float(v.mean()),
            "variance": float(v.var()), "min": float(v.min()), "max": float(v.max())}


def _load_series(paths):
    try:
        return [io.read_series(p) for p in paths]
    except (ValueError, OSError) as exc:
        raise RuntimeFailure(str(exc)) from None


def cmd_analyze(cfg, outdir, threads=1, base="."):
    b, acfg = config.parse_analyze(cfg)
    paths = _require_files(b["inputs"], base, "inputs")
    series = _load_series(paths)
    panels = {}
    try:
        report = analysis.is_report(series, b["targets"], acfg, panels=panels)
    except IncsimError as exc:
        raise RuntimeFailure(f"{type(exc).__name__}: {exc}") from None
    out = report.to_dict()
    out["inputs"] = [os.path.basename(p) for p in paths]
    out["panels"] = [os.path.basename(p) for p in analysis.write_panels(panels, outdir)]
    for k, table in enumerate(report.tables):
        io.write_lag_table(table, os.path.join(outdir, f"lag_table_{k}.csv"))
    with open(os.path.join(outdir, b["report"]), "w") as fh:
        fh.write(json.dumps(analysis.jsonable(out), sort_keys=True, indent=2) + "\n")
    _write_config(b, outdir, "analyze.config.json")
    succeeded = sum(1 for m in report.matches if m.ks is not None)
    if succeeded == 0:
        raise RuntimeFailure("no dataset pair could be matched at any target")
    return analysis.jsonable({"report": os.path.join(outdir, b["report"]), "collapse": report.collapse,
                            "max_ks": report.max_ks(), "matches": succeeded, "failures": len(report.failures)})


def cmd_fit_nig(cfg, outdir, threads=1, base="."):
    b = config.parse_fit_nig(cfg)
    (path,) = _require_files([b["input"]], base, "input")
    (ts,) = _load_series([path])
    if b["standardize"]:
        try:
            ts = analysis.standardize(ts)
        except IncsimError as exc:
            raise RuntimeFailure(str(exc)) from None
    too_long = [m for m in b["lag_steps"] if m >= len(ts)]
    if too_long:
        raise ConfigError(f"lag of {too_long[0]} steps exceeds the series length {len(ts)}", "lag_steps")
    rows = analysis.fit_nig_by_lag(ts, b["lag_steps"], b["max_samples"])
    cols = ["lag", "lag_steps", "n", "alpha", "beta", "mu", "delta", "steepness", "note"]
    io.write_rows(rows, os.path.join(outdir, "nig_fit.csv"), cols)
    dens = []
    for row in rows:
        d = analysis.increments(ts, row["lag_steps"])
        est = analysis.density_log(d, b["bins"]) if d.size >= 10 * b["bins"] else None
        if est is None:
            continue
        fit = None
        if not row["note"]:
            fit = nig_logpdf(est.centers, NIGParams(row["alpha"], row["beta"], row["mu"], row["delta"]))
        for k in range(est.centers.size):
            dens.append({"lag": row["lag"], "center": float(est.centers[k]),
                         "log_density": float(est.log_density[k]),
                         "log_nig": None if fit is None else float(fit[k])})
    io.write_rows(dens, os.path.join(outdir, "nig_density.csv"), ["lag", "center", "log_density", "log_nig"])
    _write_config(b, outdir, "fit-nig.config.json")
    return {"fits": len(rows), "flagged": sum(1 for r in rows if r["note"])}


def _table_from(path, b):
    if io.is_series_file(path):
        (ts,) = _load_series([path])
        if b["standardize"]:
            ts = analysis.standardize(ts)
        return analysis.variance_by_lag(ts, p_frac=b["p_frac"], lags_per_octave=b["lags_per_octave"],
                                        statistic=b["statistic"])
    try:
        return io.read_lag_table(path, b["statistic"], b["p_frac"])
    except (ValueError, KeyError) as exc:
        raise RuntimeFailure(f"{path}: {exc}") from None


def cmd_match(cfg, outdir, threads=1, base="."):
    b = config.parse_match(cfg)
    paths = _require_files(b["inputs"], base, "inputs")
    try:
        ti, tj = (_table_from(p, b) for p in paths)
    except IncsimError as exc:
        raise RuntimeFailure(f"{type(exc).__name__}: {exc}") from None
    targets = b["targets"]
    if targets is None:
        try:
            targets = analysis.default_targets([ti, tj], b["n_targets"])
        except TargetOutOfRange:
            # disjoint ranges: lay the ladder over the union so every row is reported
            lo = min(ti.interval()[0], tj.interval()[0])
            hi = max(ti.interval()[1], tj.interval()[1])
            targets = [float(v) for v in np.geomspace(lo, hi, b["n_targets"])] if lo > 0 else []
    rows = []
    for t in targets:
        try:
            m = analysis.match_lags(ti, tj, [t])[0]
            rows.append({"target": t, "lag_i": m.lag_i, "lag_j": m.lag_j, "ratio": m.lag_j / m.lag_i, "flag": ""})
        except TargetOutOfRange as exc:
            lo, hi = exc.interval
            rows.append({"target": t, "flag": f"out of range [{lo!r}, {hi!r}]"})
    io.write_rows(rows, os.path.join(outdir, "lag_map.csv"), ["target", "lag_i", "lag_j", "ratio", "flag"])
    _write_config(b, outdir, "match.config.json")
    return {"rows": len(rows), "flagged": sum(1 for r in rows if r["flag"])}


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "fit-nig": cmd_fit_nig, "match": cmd_match}


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("INCSIM_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"not an integer: {env!r}", "INCSIM_THREADS") from None
    if n < 1:
        raise ConfigError("must be >= 1", "INCSIM_THREADS")
    return n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--output-dir", default=".", help="directory for outputs (created if missing)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for simulators (default: $INCSIM_THREADS or 1)")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p = argparse.ArgumentParser(prog="incsim", description="Incremental-similarity simulation and analysis.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (("simulate", "simulate one process family to a series file"),
                      ("analyze", "incremental-similarity report over two or more series"),
                      ("fit-nig", "NIG fits of increments along a lag ladder"),
                      ("match", "empirical lag map between two series or lag tables")):
        sub.add_parser(name, parents=[common], help=doc)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        cfg = config.load_config(args.config)
        os.makedirs(args.output_dir, exist_ok=True)
        base = os.path.dirname(os.path.abspath(args.config))
        summary = COMMANDS[args.command](cfg, args.output_dir, threads, base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (IncsimError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(summary, sort_keys=True, default=_jsonable))
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v).__name__)


if __name__ == "__main__":
    sys.exit(main())
