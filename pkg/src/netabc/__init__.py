"""Partnership-network simulation with ABC inference over longitudinal designs."""

__version__ = "0.1.0"

from .inference import (
    ModelConfig,
    Posterior,
    PriorSpec,
    ReferenceTable,
    build_reference_table,
    distance,
    regression_adjust,
    reject_sample,
    sample_prior,
)
from .model import (
    EventLog,
    NetworkState,
    ParamSet,
    export_edges,
    init_state,
    match_pairs,
    simulate,
    step,
)
from .rngstreams import stream
from .summaries import Design, DesignVector, SummaryVector, design_summaries, wave_summaries

__all__ = [
    "Design",
    "DesignVector",
    "EventLog",
    "ModelConfig",
    "NetworkState",
    "ParamSet",
    "Posterior",
    "PriorSpec",
    "ReferenceTable",
    "SummaryVector",
    "build_reference_table",
    "design_summaries",
    "distance",
    "export_edges",
    "init_state",
    "match_pairs",
    "regression_adjust",
    "reject_sample",
    "sample_prior",
    "simulate",
    "step",
    "stream",
    "wave_summaries",
]
