"""Command-line front end for the simulation and inference pipeline.

Subcommands: simulate, summarize, reftable, infer, lag-sweep, mapping,
loess. Option precedence is flags > config file > defaults; every command
writes a metadata sidecar with the fully resolved configuration so it can
be re-run bit-identically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import lag_sweep, loess_fit, mapping_sweep, mapping_sweep as _ms  # noqa: F401
from .fileio import (
    default_output_dir,
    eventlog_from_json,
    eventlog_to_json,
    load_reference_table,
    read_metadata,
    save_posterior,
    save_reference_table,
    write_csv,
    write_edges_csv,
    write_metadata,
    write_summaries_csv,
)
from .inference import (
    ModelConfig,
    PriorSpec,
    build_reference_table,
    regression_adjust,
    reject_sample,
    sample_prior,
)
from .model import ParamSet, export_edges, simulate
from .rngstreams import DOMAIN_OBSERVATION, stream
from .summaries import Design, design_summaries, wave_summaries


class ConfigError(Exception):
    pass


def _load_config_file(path) -> dict[str, str]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return read_metadata(p)


def _resolve(args, cfg: dict[str, str], name: str, cast, default):
    """flags > config file > default."""
    flag = getattr(args, name.replace("-", "_"), None)
    if flag is not None:
        return flag
    if name in cfg:
        try:
            return cast(cfg[name])
        except ValueError as exc:
            raise ConfigError(f"bad config value for {name}: {cfg[name]!r}") from exc
    return default


def _design_from(args, cfg) -> Design:
    kind = _resolve(args, cfg, "design", str, "two-wave")
    lag = _resolve(args, cfg, "lag", int, 50)
    window = _resolve(args, cfg, "window", int, 12)
    if kind == "one-wave":
        return Design(waves=1, window=window)
    if kind == "two-wave":
        return Design(waves=2, lag=lag, window=window)
    raise ConfigError(f"unknown design {kind!r} (expected one-wave or two-wave)")


def _model_config(args, cfg) -> ModelConfig:
    return ModelConfig(
        n=_resolve(args, cfg, "n", int, 1000),
        mu=_resolve(args, cfg, "mu", float, 0.0),
        burn_in=_resolve(args, cfg, "burn_in", int, 1000),
        prior=PriorSpec(),
    )


def _outdir(args, cfg) -> Path:
    out = _resolve(args, cfg, "out_dir", str, None)
    outdir = Path(out) if out is not None else default_output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def _sidecar(outdir: Path, command: str, resolved: dict) -> None:
    meta = {"command": command, "tool_version": __version__, **resolved}
    write_metadata(outdir / f"{command}.meta", meta)


def _cmd_simulate(args):
    cfg = _load_config_file(args.config)
    params = ParamSet(
        rho=_resolve(args, cfg, "rho", float, 0.3),
        sigma=_resolve(args, cfg, "sigma", float, 0.1),
        omega0=_resolve(args, cfg, "omega0", float, 0.4),
        omega1=_resolve(args, cfg, "omega1", float, 0.2),
        mu=_resolve(args, cfg, "mu", float, 0.0),
        n=_resolve(args, cfg, "n", int, 1000),
    )
    burn_in = _resolve(args, cfg, "burn_in", int, 1000)
    span = _resolve(args, cfg, "record_span", int, 12)
    seed = _resolve(args, cfg, "seed", int, 0)
    outdir = _outdir(args, cfg)
    log, _ = simulate(params, burn_in, span, seed=seed)
    rows = export_edges(log, log.base_iteration + 1, log.last_iteration)
    write_edges_csv(outdir / "edges.csv", rows)
    eventlog_to_json(log, outdir / "eventlog.json")
    _sidecar(outdir, "simulate", {
        "rho": params.rho, "sigma": params.sigma,
        "omega0": params.omega0, "omega1": params.omega1,
        "mu": params.mu, "n": params.n,
        "burn_in": burn_in, "record_span": span, "seed": seed,
    })


def _cmd_summarize(args):
    cfg = _load_config_file(args.config)
    design = _design_from(args, cfg)
    outdir = _outdir(args, cfg)
    log = eventlog_from_json(args.log)
    wave1_end = log.base_iteration + design.window
    waves = [(1, wave_summaries(log, wave1_end, design.window))]
    if design.waves == 2:
        waves.append((2, wave_summaries(log, wave1_end + design.lag, design.window)))
    write_summaries_csv(outdir / "summaries.csv", design, waves)
    _sidecar(outdir, "summarize", {
        "log": args.log, "design": design.tag, "lag": design.lag,
        "window": design.window,
    })


def _cmd_reftable(args):
    cfg = _load_config_file(args.config)
    design = _design_from(args, cfg)
    config = _model_config(args, cfg)
    count = _resolve(args, cfg, "count", int, 10000)
    seed = _resolve(args, cfg, "seed", int, 0)
    jobs = _resolve(args, cfg, "jobs", int, -1)
    outdir = _outdir(args, cfg)
    table = build_reference_table(design, count, config, seed, n_jobs=jobs)
    save_reference_table(table, outdir / "reftable.csv")
    _sidecar(outdir, "reftable", {
        "design": design.tag, "lag": design.lag, "window": design.window,
        "n": config.n, "mu": config.mu, "burn_in": config.burn_in,
        "count": count, "seed": seed,
    })


def _cmd_infer(args):
    cfg = _load_config_file(args.config)
    outdir = _outdir(args, cfg)
    table = load_reference_table(args.table)
    fraction = _resolve(args, cfg, "accept_fraction", float, 0.01)
    adjust = not args.no_adjust
    if args.observed is not None:
        observed = np.genfromtxt(args.observed, delimiter=",", skip_header=1)
        observed = np.atleast_1d(observed.squeeze())
    elif args.truth_seed is not None:
        rng = stream(args.truth_seed, DOMAIN_OBSERVATION)
        truth = sample_prior(table.config.prior, rng, mu=table.config.mu,
                             n=table.config.n)
        log, _ = simulate(truth, table.config.burn_in,
                          table.design.record_span, rng=rng)
        observed = design_summaries(log, table.design).values
        write_csv(outdir / "truth.csv",
                  ["rho", "sigma", "omega0", "omega1"],
                  [(truth.rho, truth.sigma, truth.omega0, truth.omega1)])
    else:
        raise ConfigError("infer needs --observed or --truth-seed")
    posterior = reject_sample(table, observed, fraction)
    if adjust:
        posterior = regression_adjust(
            posterior, table, weighted=not args.unweighted_adjust
        )
    save_posterior(posterior, outdir / "posterior.csv")
    _sidecar(outdir, "infer", {
        "table": args.table, "accept_fraction": fraction,
        "adjusted": adjust,
        "adjust_weighting": "none" if not adjust
        else ("unweighted" if args.unweighted_adjust else "epanechnikov"),
        "observed": args.observed or "",
        "truth_seed": args.truth_seed if args.truth_seed is not None else "",
    })


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad integer list: {text!r}") from exc


def _cmd_lag_sweep(args):
    cfg = _load_config_file(args.config)
    config = _model_config(args, cfg)
    lags = _parse_int_list(_resolve(args, cfg, "lags", str, "0,10,25,50,100,150"))
    truth_count = _resolve(args, cfg, "truth_count", int, 20)
    table_count = _resolve(args, cfg, "table_count", int, 2000)
    window = _resolve(args, cfg, "window", int, 12)
    fraction = _resolve(args, cfg, "accept_fraction", float, 0.05)
    seed = _resolve(args, cfg, "seed", int, 0)
    jobs = _resolve(args, cfg, "jobs", int, -1)
    outdir = _outdir(args, cfg)
    records, agg = lag_sweep(
        lags, truth_count, table_count, config, seed,
        window=window, accept_fraction=fraction, n_jobs=jobs,
    )
    write_csv(outdir / "rmse_records.csv", list(records.columns),
              records.itertuples(index=False))
    write_csv(outdir / "rmse_by_lag.csv", list(agg.columns),
              agg.itertuples(index=False))
    _sidecar(outdir, "lag-sweep", {
        "lags": ",".join(str(v) for v in lags),
        "truth_count": truth_count, "table_count": table_count,
        "window": window, "accept_fraction": fraction,
        "n": config.n, "mu": config.mu, "burn_in": config.burn_in,
        "seed": seed,
    })


def _cmd_mapping(args):
    cfg = _load_config_file(args.config)
    config = _model_config(args, cfg)
    param = _resolve(args, cfg, "param", str, "sigma")
    runs = _resolve(args, cfg, "runs", int, 100)
    mode = _resolve(args, cfg, "mode", str, "fixed-others")
    window = _resolve(args, cfg, "window", int, 12)
    seed = _resolve(args, cfg, "seed", int, 0)
    jobs = _resolve(args, cfg, "jobs", int, -1)
    grid = None
    grid_text = _resolve(args, cfg, "grid", str, None)
    if grid_text:
        grid = [float(v) for v in grid_text.split(",") if v.strip()]
    outdir = _outdir(args, cfg)
    rows, medians = mapping_sweep(
        param, grid=grid, mode=mode, runs_per_value=runs, config=config,
        master_seed=seed, window=window, n_jobs=jobs,
    )
    write_csv(outdir / "mapping.csv", list(rows.columns),
              rows.itertuples(index=False))
    write_csv(outdir / "mapping_medians.csv", list(medians.columns),
              medians.itertuples(index=False))
    _sidecar(outdir, "mapping", {
        "param": param, "mode": mode, "runs": runs, "window": window,
        "grid": grid_text or "default",
        "n": config.n, "mu": config.mu, "burn_in": config.burn_in,
        "seed": seed,
    })


def _cmd_loess(args):
    cfg = _load_config_file(args.config)
    span = _resolve(args, cfg, "span", float, 0.75)
    outdir = _outdir(args, cfg)
    data = np.genfromtxt(args.input, delimiter=",", names=True)
    x = data[args.x_col]
    y = data[args.y_col]
    curve = loess_fit(x, y, span=span)
    write_csv(outdir / "loess.csv", ["x", "fit", "lo95", "hi95"],
              zip(curve.x, curve.fitted, curve.lo95, curve.hi95))
    _sidecar(outdir, "loess", {
        "input": args.input, "span": span, "x_col": args.x_col,
        "y_col": args.y_col, "ci_method": curve.method,
    })


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netabc",
        description="Partnership-network simulation and ABC inference pipeline",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--out-dir", help="output directory (default $NETABC_OUTDIR or .)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int, help="worker count (default all cores)")

    sp = sub.add_parser("simulate", help="run one trajectory and export edges")
    common(sp)
    for name in ("rho", "sigma", "omega0", "omega1", "mu"):
        sp.add_argument(f"--{name}", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--record-span", type=int)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("summarize", help="summaries from a stored trajectory")
    common(sp)
    sp.add_argument("--log", required=True, help="eventlog.json from simulate")
    sp.add_argument("--design", choices=["one-wave", "two-wave"])
    sp.add_argument("--lag", type=int)
    sp.add_argument("--window", type=int)
    sp.set_defaults(func=_cmd_summarize)

    sp = sub.add_parser("reftable", help="build an ABC reference table")
    common(sp)
    sp.add_argument("--design", choices=["one-wave", "two-wave"])
    sp.add_argument("--lag", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--burn-in", type=int)
    sp.set_defaults(func=_cmd_reftable)

    sp = sub.add_parser("infer", help="accept/reject (+ adjustment) against a table")
    common(sp)
    sp.add_argument("--table", required=True, help="reftable.csv (with .meta sidecar)")
    sp.add_argument("--observed", help="CSV with one row of observed summaries")
    sp.add_argument("--truth-seed", type=int,
                    help="simulate a ground-truth observation from the prior")
    sp.add_argument("--accept-fraction", type=float)
    sp.add_argument("--no-adjust", action="store_true")
    sp.add_argument("--unweighted-adjust", action="store_true",
                    help="plain least squares instead of Epanechnikov weights")
    sp.set_defaults(func=_cmd_infer)

    sp = sub.add_parser("lag-sweep", help="RMSE vs lag experiment")
    common(sp)
    sp.add_argument("--lags", help="comma-separated lag list")
    sp.add_argument("--truth-count", type=int)
    sp.add_argument("--table-count", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--accept-fraction", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--burn-in", type=int)
    sp.set_defaults(func=_cmd_lag_sweep)

    sp = sub.add_parser("mapping", help="summary-vs-parameter mapping sweep")
    common(sp)
    sp.add_argument("--param", choices=["rho", "sigma", "omega0", "omega1"])
    sp.add_argument("--grid", help="comma-separated values in (0, 1]")
    sp.add_argument("--mode", choices=["fixed-others", "prior-others"])
    sp.add_argument("--runs", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--burn-in", type=int)
    sp.set_defaults(func=_cmd_mapping)

    sp = sub.add_parser("loess", help="loess-smooth a result curve")
    common(sp)
    sp.add_argument("--input", required=True, help="CSV with the points to smooth")
    sp.add_argument("--x-col", default="x")
    sp.add_argument("--y-col", default="y")
    sp.add_argument("--span", type=float)
    sp.set_defaults(func=_cmd_loess)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"netabc: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"netabc: I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
