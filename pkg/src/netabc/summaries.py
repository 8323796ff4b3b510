"""Questionnaire-style network summaries over a recall window.

Four statistics per observation wave:
  s1  proportion of present nodes with no steady partner
  s2  mean duration of steady ties that start and end inside the window
  s3  proportion of steady-partnered nodes that also hold a casual tie
  s4  steady episodes / (steady + casual episodes) over the window
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EventLog

DEFAULT_WINDOW = 12


@dataclass(frozen=True)
class Design:
    """Observation design: one wave, or two waves separated by `lag`."""

    waves: int
    lag: int = 0
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.waves not in (1, 2):
            raise ValueError("waves must be 1 or 2")
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if self.waves == 1 and self.lag != 0:
            raise ValueError("one-wave design cannot have a lag")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    @property
    def n_components(self) -> int:
        return 4 * self.waves

    @property
    def record_span(self) -> int:
        """Recorded iterations needed after burn-in to evaluate the design."""
        return self.window + (self.lag if self.waves == 2 else 0)

    @property
    def tag(self) -> str:
        return "one-wave" if self.waves == 1 else "two-wave"


@dataclass
class SummaryVector:
    s1: float
    s2: float
    s3: float
    s4: float
    s2_defined: bool = True

    def values(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3, self.s4], dtype=float)


@dataclass
class DesignVector:
    design: Design
    values: np.ndarray  # length 4 (one wave) or 8 (wave-1 block then wave-2)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.design.n_components,):
            raise ValueError(
                f"expected {self.design.n_components} components, "
                f"got {self.values.shape}"
            )


def wave_summaries(log: EventLog, wave_end: int, window: int = DEFAULT_WINDOW) -> SummaryVector:
    """Summaries for one wave observed at `wave_end` looking back `window`."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lo = wave_end - window  # window is (lo, wave_end]
    if lo < log.base_iteration or wave_end > log.last_iteration:
        raise ValueError(
            f"window ({lo}, {wave_end}] outside recorded span "
            f"[{log.base_iteration}, {log.last_iteration}]"
        )

    nodes = log.nodes_at(wave_end)
    steady = log.steady_edges_at(wave_end)
    steady_members = {u for pair in steady for u in pair}

    s1 = (len(nodes) - len(steady_members)) / len(nodes) if nodes else 0.0

    durations = [
        end - start + 1
        for _, _, start, end in log.steady_dissolutions
        if start > lo and end <= wave_end
    ]
    s2_defined = bool(durations)
    s2 = float(np.mean(durations)) if durations else 0.0

    casual_members = {u for pair in log.casual_pairs_at(wave_end) for u in pair}
    s3 = (
        len(steady_members & casual_members) / len(steady_members)
        if steady_members
        else 0.0
    )

    casual_episodes = sum(1 for t, *_ in log.casual_formations if lo < t <= wave_end)
    steady_count = 0
    for _, _, start, end in log.steady_episodes():
        alive_through = log.last_iteration if end is None else end
        if start <= wave_end and alive_through > lo:
            steady_count += 1
    total = steady_count + casual_episodes
    s4 = steady_count / total if total else 0.0

    return SummaryVector(s1=s1, s2=s2, s3=s3, s4=s4, s2_defined=s2_defined)


def design_summaries(log: EventLog, design: Design) -> DesignVector:
    """Assemble the 4- or 8-component summary vector for a design.

    Wave 1 is observed `window` iterations after the recorded span begins;
    wave 2 (if any) `lag` iterations later. Two-wave vectors are the
    concatenation of the wave-1 and wave-2 blocks.
    """
    wave1_end = log.base_iteration + design.window
    waves = [wave1_end]
    if design.waves == 2:
        waves.append(wave1_end + design.lag)
    if waves[-1] > log.last_iteration:
        raise ValueError(
            f"recorded span ends at {log.last_iteration}, "
            f"design needs iteration {waves[-1]}"
        )
    blocks = [wave_summaries(log, w, design.window).values() for w in waves]
    return DesignVector(design=design, values=np.concatenate(blocks))


def component_names(design: Design) -> list[str]:
    return [
        f"w{w}_s{i}" for w in range(1, design.waves + 1) for i in range(1, 5)
    ]
