"""File formats: CSVs, the event-log JSON, and key-value metadata sidecars.

All CSVs are headered, ASCII, LF-terminated. Floats are written with
repr() so files round-trip bit-exactly and checksums are stable.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .inference import PARAM_NAMES, ModelConfig, Posterior, PriorSpec, ReferenceTable
from .model import EventLog
from .summaries import Design, component_names


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_metadata(path, mapping: dict) -> None:
    """Plain-text sidecar: one `key = value` per line, '#' comments allowed."""
    with open(path, "w", newline="\n") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {_fmt(value)}\n")


def read_metadata(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def write_edges_csv(path, rows) -> None:
    write_csv(path, ["iteration", "node_u", "node_v", "type"], rows)


def write_summaries_csv(path, design: Design, waves) -> None:
    """`waves` is a list of (wave_number, SummaryVector)."""
    rows = [
        (design.tag, design.lag, w, s.s1, s.s2, s.s2_defined, s.s3, s.s4)
        for w, s in waves
    ]
    write_csv(
        path,
        ["design", "lag", "wave", "s1", "s2", "s2_defined", "s3", "s4"],
        rows,
    )


def eventlog_to_json(log: EventLog, path) -> None:
    data = {
        "base_iteration": log.base_iteration,
        "last_iteration": log.last_iteration,
        "base_nodes": log.base_nodes,
        "base_steady": [list(t) for t in log.base_steady],
        "steady_formations": [list(t) for t in log.steady_formations],
        "steady_dissolutions": [list(t) for t in log.steady_dissolutions],
        "casual_formations": [list(t) for t in log.casual_formations],
        "arrivals": [list(t) for t in log.arrivals],
        "departures": [list(t) for t in log.departures],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(data, fh, separators=(",", ":"))
        fh.write("\n")


def eventlog_from_json(path) -> EventLog:
    data = json.loads(Path(path).read_text())
    return EventLog(
        base_iteration=data["base_iteration"],
        last_iteration=data["last_iteration"],
        base_nodes=list(data["base_nodes"]),
        base_steady=[tuple(t) for t in data["base_steady"]],
        steady_formations=[tuple(t) for t in data["steady_formations"]],
        steady_dissolutions=[tuple(t) for t in data["steady_dissolutions"]],
        casual_formations=[tuple(t) for t in data["casual_formations"]],
        arrivals=[tuple(t) for t in data["arrivals"]],
        departures=[tuple(t) for t in data["departures"]],
    )


def meta_path(csv_path) -> Path:
    return Path(str(csv_path) + ".meta")


def save_reference_table(table: ReferenceTable, path) -> None:
    names = component_names(table.design)
    header = ["sim_index", *PARAM_NAMES, *names]
    rows = (
        (i, *table.params[i], *table.summaries[i]) for i in range(table.count)
    )
    write_csv(path, header, rows)
    meta = {
        "design": table.design.tag,
        "lag": table.design.lag,
        "window": table.design.window,
        "n": table.config.n,
        "mu": table.config.mu,
        "burn_in": table.config.burn_in,
        "master_seed": table.master_seed,
        "count": table.count,
    }
    bounds = table.config.prior.bounds
    for name, (lo, hi) in zip(PARAM_NAMES, bounds):
        meta[f"prior_inv_{name}_lo"] = lo
        meta[f"prior_inv_{name}_hi"] = hi
    for j, name in enumerate(names):
        meta[f"col_mean_{name}"] = table.col_means[j]
        meta[f"col_sd_{name}"] = table.col_sds[j]
    for j, name in enumerate(PARAM_NAMES):
        meta[f"param_mean_{name}"] = table.param_means[j]
        meta[f"param_sd_{name}"] = table.param_sds[j]
    write_metadata(meta_path(path), meta)


def load_reference_table(path) -> ReferenceTable:
    meta = read_metadata(meta_path(path))
    design = Design(
        waves=1 if meta["design"] == "one-wave" else 2,
        lag=int(meta["lag"]),
        window=int(meta["window"]),
    )
    prior = PriorSpec(
        inv_rho=(float(meta["prior_inv_rho_lo"]), float(meta["prior_inv_rho_hi"])),
        inv_sigma=(float(meta["prior_inv_sigma_lo"]), float(meta["prior_inv_sigma_hi"])),
        inv_omega0=(float(meta["prior_inv_omega0_lo"]), float(meta["prior_inv_omega0_hi"])),
        inv_omega1=(float(meta["prior_inv_omega1_lo"]), float(meta["prior_inv_omega1_hi"])),
    )
    config = ModelConfig(
        n=int(meta["n"]),
        mu=float(meta["mu"]),
        burn_in=int(meta["burn_in"]),
        prior=prior,
    )
    names = component_names(design)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    params = data[:, 1:5]
    summaries = data[:, 5 : 5 + len(names)]
    table = ReferenceTable(
        design=design,
        params=params,
        summaries=summaries,
        master_seed=int(meta["master_seed"]),
        config=config,
    )
    # trust the stored norms so a saved table reloads bit-exactly
    table.col_means = np.array([float(meta[f"col_mean_{n}"]) for n in names])
    table.col_sds = np.array([float(meta[f"col_sd_{n}"]) for n in names])
    table.param_means = np.array([float(meta[f"param_mean_{p}"]) for p in PARAM_NAMES])
    table.param_sds = np.array([float(meta[f"param_sd_{p}"]) for p in PARAM_NAMES])
    return table


def save_posterior(posterior: Posterior, path) -> None:
    header = [
        "sim_index", "distance", *PARAM_NAMES, *[f"adj_{p}" for p in PARAM_NAMES]
    ]
    adj = (
        posterior.adjusted_params
        if posterior.adjusted_params is not None
        else posterior.accepted_params
    )
    rows = (
        (
            int(posterior.accepted_index[i]),
            posterior.distances[i],
            *posterior.accepted_params[i],
            *adj[i],
        )
        for i in range(posterior.accepted_params.shape[0])
    )
    write_csv(path, header, rows)


def default_output_dir() -> Path:
    return Path(os.environ.get("NETABC_OUTDIR", "."))
