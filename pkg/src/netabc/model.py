"""Discrete-time partnership network simulator.

The population evolves in monthly iterations. Steady partnerships persist
across iterations and dissolve with a fixed per-iteration probability;
casual partnerships last exactly one iteration. Each node holds at most one
steady and at most one casual partner at a time. Optional migration removes
nodes with a fixed probability and adds new singles at a constant rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ParamSet:
    """Per-iteration event probabilities plus the target population size.

    rho     : probability a single node becomes willing to form a steady tie
    sigma   : probability an existing steady tie dissolves
    omega0  : probability a single node seeks a casual tie
    omega1  : probability a steady-partnered node seeks a casual tie
    mu      : probability a node leaves the population
    n       : initial (and target) population size
    """

    rho: float
    sigma: float
    omega0: float
    omega1: float
    mu: float = 0.0
    n: int = 1000

    def __post_init__(self):
        for name in ("rho", "sigma", "omega0", "omega1", "mu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.n < 2:
            raise ValueError(f"population size n={self.n} must be >= 2")


@dataclass
class NetworkState:
    """Live simulator state, stored as arrays aligned with `ids` (ascending).

    `partner` / `casual_partner` hold the partner's node id, or -1.
    `steady_start` holds the formation iteration of the node's steady tie.
    Node ids are assigned monotonically and never reused.
    """

    ids: np.ndarray
    partner: np.ndarray
    steady_start: np.ndarray
    casual_partner: np.ndarray
    iteration: int = 0
    next_id: int = 0
    arrival_accumulator: float = 0.0

    @property
    def nodes(self) -> set[int]:
        return {int(i) for i in self.ids}

    @property
    def steady_edges(self) -> dict[tuple[int, int], int]:
        """Current steady pairs (u < v) mapped to their start iteration."""
        out = {}
        for idx in np.nonzero(self.partner >= 0)[0]:
            u, v = int(self.ids[idx]), int(self.partner[idx])
            if u < v:
                out[(u, v)] = int(self.steady_start[idx])
        return out

    @property
    def casual_edges(self) -> set[tuple[int, int]]:
        out = set()
        for idx in np.nonzero(self.casual_partner >= 0)[0]:
            u, v = int(self.ids[idx]), int(self.casual_partner[idx])
            if u < v:
                out.add((u, v))
        return out

    def population(self) -> int:
        return int(self.ids.size)

    def check_invariants(self):
        """Raise AssertionError if degree caps or edge bookkeeping are broken."""
        assert np.all(np.diff(self.ids) > 0), "node ids not strictly ascending"
        for arr in (self.partner, self.casual_partner):
            linked = arr >= 0
            if linked.any():
                # partner ids must be current nodes and links must be mutual
                pidx = np.searchsorted(self.ids, arr[linked])
                assert np.all(pidx < self.ids.size)
                assert np.all(self.ids[pidx] == arr[linked]), "dangling partner id"
                back = arr[pidx]
                assert np.all(back == self.ids[linked]), "partner link not mutual"
        assert np.all(self.steady_start[self.partner >= 0] >= 0)


@dataclass
class StepEvents:
    """Events produced by one iteration of the model."""

    iteration: int
    steady_formations: list = field(default_factory=list)    # (t, u, v)
    steady_dissolutions: list = field(default_factory=list)  # (u, v, start, end)
    casual_formations: list = field(default_factory=list)    # (t, u, v, u_part, v_part)
    arrivals: list = field(default_factory=list)             # (t, node)
    departures: list = field(default_factory=list)           # (t, node)


@dataclass
class EventLog:
    """Recorded history of a simulation.

    `base_*` describe the state at the end of iteration `base_iteration`
    (the last burn-in step); events cover iterations base_iteration+1 ..
    last_iteration. A dissolution's `end` is the last iteration the tie
    existed, so duration = end - start + 1.
    """

    base_iteration: int = 0
    last_iteration: int = 0
    base_nodes: list = field(default_factory=list)
    base_steady: list = field(default_factory=list)          # (u, v, start)
    steady_formations: list = field(default_factory=list)
    steady_dissolutions: list = field(default_factory=list)
    casual_formations: list = field(default_factory=list)
    arrivals: list = field(default_factory=list)
    departures: list = field(default_factory=list)

    def extend(self, ev: StepEvents):
        self.steady_formations.extend(ev.steady_formations)
        self.steady_dissolutions.extend(ev.steady_dissolutions)
        self.casual_formations.extend(ev.casual_formations)
        self.arrivals.extend(ev.arrivals)
        self.departures.extend(ev.departures)
        self.last_iteration = ev.iteration

    def _check_iter(self, t: int):
        if not self.base_iteration <= t <= self.last_iteration:
            raise ValueError(
                f"iteration {t} outside recorded span "
                f"[{self.base_iteration}, {self.last_iteration}]"
            )

    def nodes_at(self, t: int) -> set[int]:
        """Node ids present at the end of iteration t."""
        self._check_iter(t)
        nodes = set(self.base_nodes)
        for ti, nid in self.arrivals:
            if ti <= t:
                nodes.add(nid)
        for ti, nid in self.departures:
            if ti <= t:
                nodes.discard(nid)
        return nodes

    def steady_edges_at(self, t: int) -> dict[tuple[int, int], int]:
        """Steady pairs alive at the end of iteration t, mapped to start."""
        self._check_iter(t)
        # A dissolution with end = e takes effect at iteration e + 1; apply
        # removals before formations at the same effective time so a pair may
        # re-form in the step right after it dissolved.
        events = []
        for u, v, start, end in self.steady_dissolutions:
            events.append((end + 1, 0, u, v, start))
        for ti, u, v in self.steady_formations:
            events.append((ti, 1, u, v, ti))
        events.sort()
        alive = {(u, v): start for u, v, start in self.base_steady}
        for eff, kind, u, v, start in events:
            if eff > t:
                break
            if kind == 0:
                alive.pop((u, v), None)
            else:
                alive[(u, v)] = start
        return alive

    def casual_pairs_at(self, t: int) -> list[tuple[int, int]]:
        self._check_iter(t)
        return [(u, v) for ti, u, v, _, _ in self.casual_formations if ti == t]

    def steady_episodes(self) -> list[tuple[int, int, int, int | None]]:
        """All steady relationship episodes as (u, v, start, end-or-None).

        end is None for ties still alive at the end of the recorded span.
        """
        out = [(u, v, s, e) for u, v, s, e in self.steady_dissolutions]
        for (u, v), s in self.steady_edges_at(self.last_iteration).items():
            out.append((u, v, s, None))
        return out


def init_state(n: int) -> NetworkState:
    """Empty graph on n nodes at iteration 0."""
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    return NetworkState(
        ids=np.arange(n, dtype=np.int64),
        partner=np.full(n, -1, dtype=np.int64),
        steady_start=np.full(n, -1, dtype=np.int64),
        casual_partner=np.full(n, -1, dtype=np.int64),
        iteration=0,
        next_id=n,
        arrival_accumulator=0.0,
    )


def _match(willing: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform random perfect matching on the willing pool; (m, 2) array, u < v.

    Odd pool: the left-out node is uniform over the pool (it is the last
    element of a uniform permutation).
    """
    k = int(willing.size)
    if k < 2:
        return np.empty((0, 2), dtype=np.int64)
    perm = rng.permutation(willing)
    m = k - (k % 2)
    a, b = perm[0:m:2], perm[1:m:2]
    return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)


def match_pairs(willing, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Randomly pair up as many of the willing nodes as possible."""
    arr = np.asarray(list(willing), dtype=np.int64)
    if arr.size != np.unique(arr).size:
        raise ValueError("willing pool contains duplicate ids")
    return [(int(u), int(v)) for u, v in _match(arr, rng)]


def step(
    state: NetworkState,
    params: ParamSet,
    rng: np.random.Generator,
    record: bool = True,
) -> tuple[NetworkState, StepEvents]:
    """Advance the network by one iteration (in place) and return its events.

    Order: clear casuals; migration (departures then arrivals); steady
    dissolution; steady formation; casual formation. All per-node draws run
    over nodes in ascending id order.
    """
    t_prev = state.iteration
    t = t_prev + 1
    ev = StepEvents(iteration=t)

    ids, partner, start = state.ids, state.partner, state.steady_start

    # casual ties from the previous iteration dissolve
    state.casual_partner = np.full(ids.size, -1, dtype=np.int64)

    if params.mu > 0.0:
        draws = rng.random(ids.size)
        depart = draws < params.mu
        if depart.any():
            departing = ids[depart]
            dissolved = {}
            for idx in np.nonzero(depart & (partner >= 0))[0]:
                u, v = int(ids[idx]), int(partner[idx])
                key = (u, v) if u < v else (v, u)
                dissolved[key] = int(start[idx])
            if record:
                for (u, v), s in sorted(dissolved.items()):
                    ev.steady_dissolutions.append((u, v, s, t_prev))
                ev.departures.extend((t, int(nid)) for nid in departing)
            # surviving partners of departed nodes become single
            widowed = ~depart & (partner >= 0) & np.isin(partner, departing)
            partner[widowed] = -1
            start[widowed] = -1
            keep = ~depart
            ids = state.ids = ids[keep]
            partner = state.partner = partner[keep]
            start = state.steady_start = start[keep]
            state.casual_partner = np.full(ids.size, -1, dtype=np.int64)
        # constant-rate arrivals, fractional remainder carried forward
        acc = state.arrival_accumulator + params.n * params.mu
        n_new = int(acc)
        state.arrival_accumulator = acc - n_new
        if n_new:
            new_ids = np.arange(state.next_id, state.next_id + n_new, dtype=np.int64)
            state.next_id += n_new
            ids = state.ids = np.concatenate([ids, new_ids])
            partner = state.partner = np.concatenate(
                [partner, np.full(n_new, -1, dtype=np.int64)]
            )
            start = state.steady_start = np.concatenate(
                [start, np.full(n_new, -1, dtype=np.int64)]
            )
            state.casual_partner = np.full(ids.size, -1, dtype=np.int64)
            if record:
                ev.arrivals.extend((t, int(nid)) for nid in new_ids)

    # steady dissolution: one Bernoulli(sigma) per existing tie, ordered by
    # the tie's lower endpoint id
    lower = (partner >= 0) & (ids < partner)
    eidx = np.nonzero(lower)[0]
    if eidx.size:
        draws = rng.random(eidx.size)
        diss = eidx[draws < params.sigma]
        if diss.size:
            u_ids, v_ids, starts = ids[diss], partner[diss], start[diss]
            vidx = np.searchsorted(ids, v_ids)
            if record:
                for u, v, s in zip(u_ids, v_ids, starts):
                    ev.steady_dissolutions.append((int(u), int(v), int(s), t_prev))
            partner[diss] = -1
            start[diss] = -1
            partner[vidx] = -1
            start[vidx] = -1

    # steady formation among degree-0 nodes
    draws = rng.random(ids.size)
    willing = ids[(partner < 0) & (draws < params.rho)]
    pairs = _match(willing, rng)
    if pairs.size:
        ai = np.searchsorted(ids, pairs[:, 0])
        bi = np.searchsorted(ids, pairs[:, 1])
        partner[ai] = pairs[:, 1]
        partner[bi] = pairs[:, 0]
        start[ai] = t
        start[bi] = t
        if record:
            ev.steady_formations.extend(
                (t, int(u), int(v)) for u, v in pairs
            )

    # casual formation: singles draw against omega0, partnered against omega1
    draws = rng.random(ids.size)
    thresh = np.where(partner < 0, params.omega0, params.omega1)
    cwilling = ids[draws < thresh]
    cpairs = _match(cwilling, rng)
    if cpairs.size:
        ai = np.searchsorted(ids, cpairs[:, 0])
        bi = np.searchsorted(ids, cpairs[:, 1])
        state.casual_partner[ai] = cpairs[:, 1]
        state.casual_partner[bi] = cpairs[:, 0]
        if record:
            ev.casual_formations.extend(
                (t, int(u), int(v), bool(partner[i] >= 0), bool(partner[j] >= 0))
                for (u, v), i, j in zip(cpairs, ai, bi)
            )

    state.iteration = t
    return state, ev


def simulate(
    params: ParamSet,
    burn_in: int,
    record_span: int,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[EventLog, NetworkState]:
    """Run burn_in unrecorded steps then record_span logged steps.

    Steady-tie start stamps persist through burn-in, so durations straddling
    the burn-in boundary are well defined. Identical (params, burn_in,
    record_span, seed) give bit-identical logs.
    """
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    if record_span < 1:
        raise ValueError("record_span must be >= 1")
    if rng is None:
        from .rngstreams import stream

        rng = stream(seed if seed is not None else 0)
    state = init_state(params.n)
    for _ in range(burn_in):
        step(state, params, rng, record=False)
    log = EventLog(
        base_iteration=state.iteration,
        last_iteration=state.iteration,
        base_nodes=[int(i) for i in state.ids],
        base_steady=[(u, v, s) for (u, v), s in sorted(state.steady_edges.items())],
    )
    for _ in range(record_span):
        _, ev = step(state, params, rng, record=True)
        log.extend(ev)
    return log, state


def export_edges(log: EventLog, start: int, stop: int) -> list[tuple[int, int, int, str]]:
    """Edge formation records (iteration, u, v, type) over [start, stop].

    Sorted by (iteration, type, u, v); type is "casual" or "steady".
    """
    if start > stop:
        raise ValueError(f"empty range: {start} > {stop}")
    if start <= log.base_iteration or stop > log.last_iteration:
        raise ValueError(
            f"range [{start}, {stop}] outside recorded span "
            f"({log.base_iteration}, {log.last_iteration}]"
        )
    rows = [
        (t, u, v, "steady")
        for t, u, v in log.steady_formations
        if start <= t <= stop
    ]
    rows += [
        (t, u, v, "casual")
        for t, u, v, _, _ in log.casual_formations
        if start <= t <= stop
    ]
    rows.sort(key=lambda r: (r[0], r[3], r[1], r[2]))
    return rows
