"""Rejection ABC with local-linear regression adjustment.

Priors are uniform on the inverse parameters (mean durations in months);
the reference table pairs prior draws with simulated design summaries.
Acceptance keeps the smallest Euclidean distances in normalized summary
space; the adjustment shifts accepted parameters toward their local-linear
prediction at the observed summaries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .model import ParamSet, simulate
from .rngstreams import stream
from .summaries import Design, DesignVector, component_names, design_summaries

PARAM_NAMES = ("rho", "sigma", "omega0", "omega1")


@dataclass(frozen=True)
class PriorSpec:
    """Uniform bounds, in months, on the inverse parameters 1/rho .. 1/omega1."""

    inv_rho: tuple[float, float] = (1.0, 50.0)
    inv_sigma: tuple[float, float] = (1.0, 90.0)
    inv_omega0: tuple[float, float] = (1.0, 40.0)
    inv_omega1: tuple[float, float] = (1.0, 61.0)

    def __post_init__(self):
        for name in ("inv_rho", "inv_sigma", "inv_omega0", "inv_omega1"):
            lo, hi = getattr(self, name)
            if lo < 1.0 or hi < lo:
                raise ValueError(f"{name} bounds ({lo}, {hi}) invalid; need 1 <= lo <= hi")

    @property
    def bounds(self) -> np.ndarray:
        return np.array(
            [self.inv_rho, self.inv_sigma, self.inv_omega0, self.inv_omega1]
        )

    def param_norms(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact mean and sd of each parameter (reciprocal of a uniform).

        For X = 1/U with U ~ Uniform(a, b): E[X] = ln(b/a)/(b-a),
        E[X^2] = 1/(ab).
        """
        a, b = self.bounds[:, 0], self.bounds[:, 1]
        mean = np.where(b > a, np.log(b / a) / (b - a), 1.0 / a)
        second = 1.0 / (a * b)
        sd = np.sqrt(np.maximum(second - mean**2, 0.0))
        return mean, sd


@dataclass(frozen=True)
class ModelConfig:
    """Shared model settings that are not inferred."""

    n: int = 1000
    mu: float = 0.0
    burn_in: int = 1000
    prior: PriorSpec = PriorSpec()


def sample_prior(
    spec: PriorSpec, rng: np.random.Generator, mu: float = 0.0, n: int = 1000
) -> ParamSet:
    """Draw inverse parameters uniformly and return their reciprocals."""
    b = spec.bounds
    inv = rng.uniform(b[:, 0], b[:, 1])
    rho, sigma, omega0, omega1 = 1.0 / inv
    return ParamSet(rho=rho, sigma=sigma, omega0=omega0, omega1=omega1, mu=mu, n=n)


@dataclass
class ReferenceTable:
    design: Design
    params: np.ndarray     # (count, 4): rho, sigma, omega0, omega1
    summaries: np.ndarray  # (count, n_components)
    col_means: np.ndarray = None
    col_sds: np.ndarray = None
    param_means: np.ndarray = None
    param_sds: np.ndarray = None
    master_seed: int = 0
    config: ModelConfig = ModelConfig()

    def __post_init__(self):
        if self.col_means is None:
            self.col_means = self.summaries.mean(axis=0)
            self.col_sds = self.summaries.std(axis=0)
            self.param_means = self.params.mean(axis=0)
            self.param_sds = self.params.std(axis=0)

    @property
    def count(self) -> int:
        return self.params.shape[0]


def _table_row(design, config, master_seed, seed_key, i):
    rng = stream(master_seed, *seed_key, i)
    params = sample_prior(config.prior, rng, mu=config.mu, n=config.n)
    log, _ = simulate(params, config.burn_in, design.record_span, rng=rng)
    dv = design_summaries(log, design)
    return (
        np.array([params.rho, params.sigma, params.omega0, params.omega1]),
        dv.values,
    )


def build_reference_table(
    design: Design,
    count: int,
    config: ModelConfig,
    master_seed: int,
    seed_key: tuple[int, ...] = (),
    n_jobs: int | None = None,
) -> ReferenceTable:
    """Simulate `count` prior draws under `design` and tabulate summaries.

    Row i uses the random stream (master_seed, *seed_key, i), so the table
    is identical for any n_jobs.
    """
    if count < 2:
        raise ValueError("reference table needs at least 2 rows")
    rows = Parallel(n_jobs=n_jobs or 1)(
        delayed(_table_row)(design, config, master_seed, seed_key, i)
        for i in range(count)
    )
    params = np.stack([p for p, _ in rows])
    summaries = np.stack([s for _, s in rows])
    return ReferenceTable(
        design=design,
        params=params,
        summaries=summaries,
        master_seed=master_seed,
        config=config,
    )


def _usable_columns(sds: np.ndarray) -> np.ndarray:
    mask = sds > 0
    if not mask.all():
        warnings.warn(
            f"{(~mask).sum()} constant summary column(s) dropped from distance",
            stacklevel=3,
        )
    return mask


def distance(
    a: DesignVector | np.ndarray,
    b: DesignVector | np.ndarray,
    norms: tuple[np.ndarray, np.ndarray],
) -> float:
    """Euclidean distance between two normalized summary vectors.

    Columns whose reference sd is 0 carry no information and are dropped
    with a warning.
    """
    means, sds = norms
    av = a.values if isinstance(a, DesignVector) else np.asarray(a, dtype=float)
    bv = b.values if isinstance(b, DesignVector) else np.asarray(b, dtype=float)
    if av.shape != bv.shape or av.shape != means.shape:
        raise ValueError("design vectors and norms have mismatched shapes")
    mask = _usable_columns(sds)
    z = (av[mask] - bv[mask]) / sds[mask]
    return float(np.sqrt(np.sum(z**2)))


@dataclass
class Posterior:
    observed: np.ndarray
    accepted_index: np.ndarray     # simulation indices, by ascending distance
    accepted_params: np.ndarray    # (k, 4)
    accepted_summaries: np.ndarray
    distances: np.ndarray          # ascending
    acceptance_fraction: float
    adjusted_params: np.ndarray | None = None

    @property
    def samples(self) -> np.ndarray:
        """Adjusted samples when available, raw accepted samples otherwise."""
        return (
            self.adjusted_params
            if self.adjusted_params is not None
            else self.accepted_params
        )


def reject_sample(
    table: ReferenceTable,
    observed: DesignVector | np.ndarray,
    accept_fraction: float = 0.01,
) -> Posterior:
    """Keep the ceil(fraction * count) rows nearest the observed summaries.

    Distance ties at the boundary break by ascending simulation index.
    """
    if not 0.0 < accept_fraction <= 1.0:
        raise ValueError("accept_fraction must be in (0, 1]")
    if table.count == 0:
        raise ValueError("empty reference table")
    obs = (
        observed.values
        if isinstance(observed, DesignVector)
        else np.asarray(observed, dtype=float)
    )
    mask = _usable_columns(table.col_sds)
    z = (table.summaries[:, mask] - obs[mask]) / table.col_sds[mask]
    d = np.sqrt(np.sum(z**2, axis=1))
    k = math.ceil(accept_fraction * table.count)
    order = np.argsort(d, kind="stable")[:k]
    return Posterior(
        observed=obs,
        accepted_index=order,
        accepted_params=table.params[order],
        accepted_summaries=table.summaries[order],
        distances=d[order],
        acceptance_fraction=accept_fraction,
    )


def regression_adjust(
    posterior: Posterior,
    table: ReferenceTable,
    weighted: bool = True,
) -> Posterior:
    """Local-linear adjustment of the accepted parameters.

    Each parameter is regressed on the normalized accepted summaries with
    Epanechnikov weights w_i = 1 - (d_i / d_max)^2; each sample is shifted
    by the fitted slope times its summary offset from the observation.
    Adjusted values are clamped to [0, 1]. A rank-deficient design matrix
    falls back to the unadjusted samples with a warning.
    """
    k = posterior.accepted_params.shape[0]
    mask = _usable_columns(table.col_sds)
    p = int(mask.sum())
    if k < p + 2:
        raise ValueError(f"need at least {p + 2} accepted rows, have {k}")
    x = (posterior.accepted_summaries[:, mask] - table.col_means[mask]) / table.col_sds[mask]
    x_obs = (posterior.observed[mask] - table.col_means[mask]) / table.col_sds[mask]
    d = posterior.distances
    d_max = d.max()
    if weighted and d_max > 0:
        w = 1.0 - (d / d_max) ** 2
    else:
        w = np.ones(k)
    sw = np.sqrt(w)
    design_mat = np.column_stack([np.ones(k), x])
    beta, _, rank, _ = np.linalg.lstsq(
        design_mat * sw[:, None], posterior.accepted_params * sw[:, None], rcond=None
    )
    if rank < design_mat.shape[1]:
        warnings.warn("singular regression design; returning unadjusted samples")
        adjusted = posterior.accepted_params.copy()
    else:
        shift = (x - x_obs) @ beta[1:]
        adjusted = np.clip(posterior.accepted_params - shift, 0.0, 1.0)
    return Posterior(
        observed=posterior.observed,
        accepted_index=posterior.accepted_index,
        accepted_params=posterior.accepted_params,
        accepted_summaries=posterior.accepted_summaries,
        distances=posterior.distances,
        acceptance_fraction=posterior.acceptance_fraction,
        adjusted_params=adjusted,
    )


def table_column_names(design: Design) -> list[str]:
    return ["sim_index", *PARAM_NAMES, *component_names(design)]
