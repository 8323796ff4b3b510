"""Experiment harness: RMSE estimation, lag sweeps, mapping sweeps, loess.

RMSE is computed on a normalized parameter scale (prior mean/sd) so the
four parameters contribute comparably; sweeps aggregate per-truth RMSEs
into mean curves by design and lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .inference import (
    PARAM_NAMES,
    ModelConfig,
    build_reference_table,
    regression_adjust,
    reject_sample,
    sample_prior,
)
from .model import ParamSet, simulate
from .rngstreams import (
    DOMAIN_MAPPING,
    DOMAIN_OBSERVATION,
    DOMAIN_PRIOR_BASELINE,
    DOMAIN_TABLE,
    DOMAIN_TRUTH,
    stream,
)
from .summaries import Design, design_summaries, wave_summaries

# Generative values the model was originally fitted with; used as the
# fixed-others setting in mapping sweeps.
BASE_PARAMS = {"rho": 0.3, "sigma": 0.1, "omega0": 0.4, "omega1": 0.2}

DEFAULT_MAPPING_GRID = np.round(np.arange(0.05, 1.0001, 0.05), 2)


def param_vector(params: ParamSet) -> np.ndarray:
    return np.array([params.rho, params.sigma, params.omega0, params.omega1])


def rmse(
    samples: np.ndarray,
    truth: np.ndarray,
    param_norms: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, float]:
    """Per-parameter and total RMSE of posterior samples about the truth.

    Both are computed on the normalized scale (truth - sample) / sd; the
    total satisfies total^2 = sum_j per_param_j^2 exactly.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("need at least one posterior sample")
    _, sds = param_norms
    if np.any(sds <= 0):
        raise ValueError("parameter sds must be positive")
    z = (truth[None, :] - samples) / sds[None, :]
    per_param = np.sqrt(np.mean(z**2, axis=0))
    total = float(np.sqrt(np.mean(np.sum(z**2, axis=1))))
    return per_param, total


@dataclass
class RmseRecord:
    design: str            # "one-wave", "two-wave", or "prior"
    lag: int               # -1 when not applicable
    truth_index: int
    adjusted: bool
    per_param: np.ndarray
    total: float

    def rows(self) -> list[dict]:
        base = {
            "design": self.design,
            "lag": self.lag,
            "truth_index": self.truth_index,
            "adjusted": self.adjusted,
        }
        out = [
            {**base, "param": name, "rmse": float(v)}
            for name, v in zip(PARAM_NAMES, self.per_param)
        ]
        out.append({**base, "param": "total", "rmse": self.total})
        return out


def records_frame(records: list[RmseRecord]) -> pd.DataFrame:
    return pd.DataFrame([row for rec in records for row in rec.rows()])


def aggregate_rmse(df: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard error of RMSE per (design, lag, adjusted, param)."""
    grouped = df.groupby(["design", "lag", "adjusted", "param"], sort=True)["rmse"]
    agg = grouped.agg(rmse_mean="mean", rmse_sd=lambda s: s.std(ddof=1), n_truths="count")
    agg["rmse_se"] = agg["rmse_sd"].fillna(0.0) / np.sqrt(agg["n_truths"])
    agg = agg.reset_index()
    return agg[["design", "lag", "adjusted", "param", "rmse_mean", "rmse_se", "n_truths"]]


def _truth_item(design, j, t, truth, table, config, master_seed, accept_fraction, norms):
    rng = stream(master_seed, DOMAIN_OBSERVATION, j, t)
    log, _ = simulate(truth, config.burn_in, design.record_span, rng=rng)
    observed = design_summaries(log, design)
    post = reject_sample(table, observed, accept_fraction)
    tv = param_vector(truth)
    per_u, tot_u = rmse(post.accepted_params, tv, norms)
    adj = regression_adjust(post, table)
    per_a, tot_a = rmse(adj.adjusted_params, tv, norms)
    lag = design.lag if design.waves == 2 else -1
    return [
        RmseRecord(design.tag, lag, t, False, per_u, tot_u),
        RmseRecord(design.tag, lag, t, True, per_a, tot_a),
    ]


def lag_sweep(
    lags: list[int],
    truth_count: int,
    table_count: int,
    config: ModelConfig,
    master_seed: int,
    window: int = 12,
    accept_fraction: float = 0.05,
    include_one_wave: bool = True,
    include_prior: bool = True,
    n_jobs: int | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """RMSE of the ABC posterior per design, for a shared set of truths.

    Builds one reference table per design, simulates one observation per
    (design, truth), and records adjusted and unadjusted RMSE. The same
    truths are reused across designs so comparisons are paired. Returns
    (per-truth records, aggregated means).
    """
    if not lags and not include_one_wave:
        raise ValueError("nothing to sweep")
    if truth_count < 1:
        raise ValueError("truth_count must be >= 1")
    designs = []
    if include_one_wave:
        designs.append(Design(waves=1, window=window))
    designs.extend(Design(waves=2, lag=lag, window=window) for lag in lags)

    norms = config.prior.param_norms()
    truths = [
        sample_prior(config.prior, stream(master_seed, DOMAIN_TRUTH, t),
                     mu=config.mu, n=config.n)
        for t in range(truth_count)
    ]

    records: list[RmseRecord] = []
    if include_prior:
        k = math.ceil(accept_fraction * table_count)
        for t, truth in enumerate(truths):
            rng = stream(master_seed, DOMAIN_PRIOR_BASELINE, t)
            draws = np.stack([
                param_vector(sample_prior(config.prior, rng, mu=config.mu, n=config.n))
                for _ in range(k)
            ])
            per, tot = rmse(draws, param_vector(truth), norms)
            records.append(RmseRecord("prior", -1, t, False, per, tot))

    for j, design in enumerate(designs):
        table = build_reference_table(
            design, table_count, config, master_seed,
            seed_key=(DOMAIN_TABLE, j), n_jobs=n_jobs,
        )
        items = Parallel(n_jobs=n_jobs or 1)(
            delayed(_truth_item)(
                design, j, t, truth, table, config, master_seed,
                accept_fraction, norms,
            )
            for t, truth in enumerate(truths)
        )
        for pair in items:
            records.extend(pair)

    df = records_frame(records)
    return df, aggregate_rmse(df)


def _mapping_run(param_name, value, mode, gi, k, config, master_seed, window):
    rng = stream(master_seed, DOMAIN_MAPPING, gi, k)
    if mode == "fixed-others":
        values = dict(BASE_PARAMS)
    elif mode == "prior-others":
        drawn = sample_prior(config.prior, rng, mu=config.mu, n=config.n)
        values = {name: getattr(drawn, name) for name in PARAM_NAMES}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    values[param_name] = value
    params = ParamSet(**values, mu=config.mu, n=config.n)
    log, _ = simulate(params, config.burn_in, window, rng=rng)
    s = wave_summaries(log, log.base_iteration + window, window)
    return {
        "param": param_name,
        "value": value,
        "run": k,
        "s1": s.s1,
        "s2": s.s2,
        "s3": s.s3,
        "s4": s.s4,
    }


def mapping_sweep(
    param_name: str,
    grid: np.ndarray | None = None,
    mode: str = "fixed-others",
    runs_per_value: int = 100,
    config: ModelConfig = ModelConfig(),
    master_seed: int = 0,
    window: int = 12,
    n_jobs: int | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Summaries as a function of one generative parameter.

    For each grid value, runs `runs_per_value` simulations with the other
    parameters either fixed at BASE_PARAMS or drawn from the prior. Returns
    (per-run rows, medians per grid value).
    """
    if param_name not in PARAM_NAMES:
        raise ValueError(f"unknown parameter {param_name!r}")
    if grid is None:
        grid = DEFAULT_MAPPING_GRID
    grid = np.asarray(grid, dtype=float)
    if np.any((grid <= 0) | (grid > 1)):
        raise ValueError("grid values must lie in (0, 1]")
    if runs_per_value < 1:
        raise ValueError("runs_per_value must be >= 1")
    rows = Parallel(n_jobs=n_jobs or 1)(
        delayed(_mapping_run)(
            param_name, float(v), mode, gi, k, config, master_seed, window
        )
        for gi, v in enumerate(grid)
        for k in range(runs_per_value)
    )
    df = pd.DataFrame(rows)
    medians = (
        df.groupby(["param", "value"], sort=True)[["s1", "s2", "s3", "s4"]]
        .median()
        .reset_index()
    )
    return df, medians


@dataclass
class LoessCurve:
    x: np.ndarray
    y: np.ndarray
    span: float
    fitted: np.ndarray
    half_width: np.ndarray  # pointwise 95% interval half-widths
    method: str = (
        "degree-1 local regression, tricube weights over the nearest "
        "ceil(span*N) points; approximate pointwise 95% interval from the "
        "smoother's equivalent-kernel norm with a global residual variance"
    )

    @property
    def lo95(self) -> np.ndarray:
        return self.fitted - self.half_width

    @property
    def hi95(self) -> np.ndarray:
        return self.fitted + self.half_width


def loess_fit(x, y, span: float = 0.75) -> LoessCurve:
    """Locally weighted degree-1 regression evaluated at the input points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-d arrays")
    n = x.size
    if np.unique(x).size < 3:
        raise ValueError("need at least 3 points with distinct x")
    if not 0.0 < span <= 1.0:
        raise ValueError("span must be in (0, 1]")
    q0 = max(2, math.ceil(span * n))

    fitted = np.empty(n)
    l_norm2 = np.empty(n)   # ||equivalent kernel||^2 at each x
    l_self = np.empty(n)    # own-point smoother weight, for trace(L)
    for i in range(n):
        xi = x[i]
        dist = np.abs(x - xi)
        q = q0
        while True:
            h = np.sort(dist)[q - 1]
            in_win = dist <= h if h > 0 else dist == 0
            if h > 0 and np.unique(x[in_win]).size >= 2:
                break
            if q >= n:
                # fully degenerate neighborhood; fall back to all points
                in_win = np.ones(n, dtype=bool)
                h = max(dist.max(), 1.0)
                break
            q += 1
        u = dist / h
        w = np.where(u < 1.0, (1.0 - u**3) ** 3, 0.0)
        w[in_win & (w <= 0)] = np.finfo(float).tiny  # keep boundary points usable
        w[~in_win] = 0.0
        a = np.column_stack([np.ones(n), x - xi])
        wa = a * w[:, None]
        g = a.T @ wa
        # l(xi) = e1^T (A^T W A)^-1 A^T W
        coef = np.linalg.solve(g, wa.T)
        l_vec = coef[0]
        fitted[i] = l_vec @ y
        l_norm2[i] = float(l_vec @ l_vec)
        l_self[i] = float(l_vec[i])

    resid = y - fitted
    dof = max(n - float(np.sum(l_self)), 1.0)
    sigma2 = float(np.sum(resid**2)) / dof
    half = 1.96 * np.sqrt(sigma2 * l_norm2)
    return LoessCurve(x=x, y=y, span=span, fitted=fitted, half_width=half)
