import itertools

import numpy as np
import pytest
from scipy import stats

from netabc.model import (
    EventLog,
    ParamSet,
    export_edges,
    init_state,
    match_pairs,
    simulate,
    step,
)
from netabc.rngstreams import stream


def params(**kw):
    base = dict(rho=0.0, sigma=0.0, omega0=0.0, omega1=0.0, mu=0.0, n=10)
    base.update(kw)
    return ParamSet(**base)


class TestInitState:
    def test_empty_graph(self):
        st = init_state(10)
        assert len(st.nodes) == 10
        assert st.steady_edges == {}
        assert st.casual_edges == set()
        assert st.iteration == 0
        assert st.arrival_accumulator == 0.0

    def test_minimal(self):
        st = init_state(2)
        assert len(st.nodes) == 2
        assert st.steady_edges == {}

    def test_too_small(self):
        with pytest.raises(ValueError):
            init_state(1)


class TestMatchPairs:
    def test_empty(self):
        assert match_pairs([], stream(0)) == []

    def test_forced_pair(self):
        assert match_pairs([3, 7], stream(0)) == [(3, 7)]

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            match_pairs([1, 1, 2], stream(0))

    def test_fairness_against_enumeration_oracle(self):
        # Oracle: enumerate every (excluded node, perfect matching) outcome
        # for a pool of five; all outcomes are equally likely.
        pool = [0, 1, 2, 3, 4]
        outcomes = []
        for excluded in pool:
            rest = [v for v in pool if v != excluded]
            a = rest[0]
            for b in rest[1:]:
                c, d = [v for v in rest[1:] if v != b]
                outcomes.append((excluded, frozenset([(a, b), (min(c, d), max(c, d))])))
        assert len(outcomes) == 15
        pair_prob = {}
        excl_prob = {}
        for excluded, matching in outcomes:
            excl_prob[excluded] = excl_prob.get(excluded, 0) + 1 / len(outcomes)
            for pr in matching:
                pair_prob[pr] = pair_prob.get(pr, 0) + 1 / len(outcomes)
        assert all(abs(p - 0.2) < 1e-12 for p in excl_prob.values())

        n_seeds = 10_000
        excl_count = dict.fromkeys(pool, 0)
        pair_count = dict.fromkeys(pair_prob, 0)
        for seed in range(n_seeds):
            pairs = match_pairs(pool, stream(seed))
            matched = {v for pr in pairs for v in pr}
            (left_out,) = set(pool) - matched
            excl_count[left_out] += 1
            for pr in pairs:
                pair_count[pr] += 1
        for v in pool:
            assert abs(excl_count[v] / n_seeds - 0.2) < 0.02
        for pr, expected in pair_prob.items():
            se = np.sqrt(expected * (1 - expected) / n_seeds)
            assert abs(pair_count[pr] / n_seeds - expected) < 3.5 * se


class TestStep:
    def test_forced_matching_even_pool(self):
        st = init_state(10)
        st, _ = step(st, params(rho=1.0), stream(1))
        assert len(st.steady_edges) == 5
        # every node partnered: fraction single is 0
        assert all(p >= 0 for p in st.partner)

    def test_certain_dissolution(self):
        st = init_state(10)
        st, _ = step(st, params(rho=1.0), stream(2))
        assert len(st.steady_edges) == 5
        st, ev = step(st, params(sigma=1.0), stream(3))
        assert len(st.steady_edges) == 0
        assert len(ev.steady_dissolutions) == 5

    def test_casual_one_iteration_and_odd_dropout(self):
        st = init_state(11)
        st, ev = step(st, params(omega0=1.0, n=11), stream(4))
        assert len(st.casual_edges) == 5
        assert len(ev.casual_formations) == 5
        unmatched = st.nodes - {v for pr in st.casual_edges for v in pr}
        assert len(unmatched) == 1
        # next step clears them before any new formation
        st, ev = step(st, params(n=11), stream(5))
        assert st.casual_edges == set()

    def test_migration_population_balance(self):
        # birth-death oracle: arrivals are exactly n*mu per step while
        # departures are Binomial(N, mu), so the population balances at n
        p = params(mu=0.1, n=1000)
        st = init_state(1000)
        rng = stream(6)
        pops = []
        for _ in range(500):
            st, _ = step(st, p, rng)
            pops.append(st.population())
        assert abs(np.mean(pops) - 1000) < 0.02 * 1000

    def test_departed_ids_never_reused(self):
        p = params(mu=0.3, n=20)
        st = init_state(20)
        rng = stream(7)
        seen = set(st.nodes)
        gone = set()
        for _ in range(50):
            st, ev = step(st, p, rng)
            gone |= {nid for _, nid in ev.departures}
            for _, nid in ev.arrivals:
                assert nid not in seen
                seen.add(nid)
            assert not (st.nodes & gone)

    def test_steady_formations_equal_half_willing(self):
        # everyone single and willing: floor(W/2) pairs form
        for n in (9, 10, 31):
            st = init_state(n)
            st, ev = step(st, params(rho=1.0, n=n), stream(n))
            assert len(ev.steady_formations) == n // 2


class TestInvariants:
    @pytest.mark.parametrize(
        "p",
        [
            params(rho=0.3, sigma=0.1, omega0=0.4, omega1=0.2, n=50),
            params(rho=0.8, sigma=0.5, omega0=0.9, omega1=0.9, mu=0.05, n=50),
            params(rho=1.0, sigma=1.0, omega0=1.0, omega1=1.0, mu=0.2, n=51),
        ],
    )
    def test_degree_caps_and_mutual_links(self, p):
        st = init_state(p.n)
        rng = stream(hash((p.rho, p.mu)) % 2**32)
        for _ in range(300):
            st, _ = step(st, p, rng)
            st.check_invariants()

    def test_constant_population_without_migration(self):
        p = params(rho=0.3, sigma=0.2, omega0=0.5, n=40)
        st = init_state(40)
        rng = stream(11)
        for _ in range(200):
            st, _ = step(st, p, rng)
            assert st.population() == 40

    def test_casual_edges_live_one_iteration(self):
        # the state's casual edges are exactly this iteration's formations:
        # anything from the previous iteration has been dissolved
        p = params(rho=0.3, sigma=0.1, omega0=0.6, omega1=0.4, n=30)
        st = init_state(30)
        rng = stream(12)
        for _ in range(50):
            st, ev = step(st, p, rng)
            formed = {(u, v) for _, u, v, _, _ in ev.casual_formations}
            assert st.casual_edges == formed


class TestLogReplay:
    def test_replay_reproduces_every_snapshot(self):
        # build the log step by step while keeping live snapshots, then
        # check the log's replay matches each snapshot exactly
        p = params(rho=0.3, sigma=0.15, omega0=0.4, omega1=0.2, mu=0.03, n=60)
        rng = stream(21)
        st = init_state(60)
        for _ in range(30):
            st, _ = step(st, p, rng, record=False)
        log = EventLog(
            base_iteration=st.iteration,
            last_iteration=st.iteration,
            base_nodes=[int(i) for i in st.ids],
            base_steady=[(u, v, s) for (u, v), s in sorted(st.steady_edges.items())],
        )
        snapshots = []
        for _ in range(40):
            st, ev = step(st, p, rng, record=True)
            log.extend(ev)
            snapshots.append(
                (st.iteration, st.nodes, dict(st.steady_edges), set(st.casual_edges))
            )
        for t, nodes, steady, casual in snapshots:
            assert log.nodes_at(t) == nodes
            assert log.steady_edges_at(t) == steady
            assert set(log.casual_pairs_at(t)) == casual

    def test_dissolution_end_not_before_start(self):
        p = params(rho=0.5, sigma=0.4, omega0=0.3, omega1=0.2, mu=0.05, n=50)
        log, _ = simulate(p, 20, 100, seed=22)
        assert log.steady_dissolutions
        for _, _, s, e in log.steady_dissolutions:
            assert e >= s


class TestSimulate:
    def test_determinism(self):
        p = params(rho=0.3, sigma=0.1, omega0=0.4, omega1=0.2, mu=0.02, n=100)
        log1, st1 = simulate(p, 50, 30, seed=42)
        log2, st2 = simulate(p, 50, 30, seed=42)
        assert log1 == log2
        assert np.array_equal(st1.ids, st2.ids)
        assert np.array_equal(st1.partner, st2.partner)

    def test_span_bookkeeping(self):
        p = params(rho=0.5, n=10)
        log, _ = simulate(p, 0, 1, seed=0)
        assert log.base_iteration == 0
        assert log.last_iteration == 1
        assert all(t == 1 for t, _, _ in log.steady_formations)

    def test_steady_durations_geometric(self):
        # completed durations are Geometric(sigma): mean 1/sigma, and the
        # first 20 support values pass a chi-square goodness-of-fit test
        p = params(rho=0.3, sigma=0.1, omega0=0.4, omega1=0.2, n=1000)
        log, _ = simulate(p, 300, 400, seed=13)
        durations = np.array(
            [e - s + 1 for _, _, s, e in log.steady_dissolutions]
        )
        assert durations.size >= 10_000
        assert abs(durations.mean() - 10.0) < 0.05 * 10.0

        sigma = 0.1
        kmax = 20
        observed = np.array(
            [np.sum(durations == k) for k in range(1, kmax + 1)]
            + [np.sum(durations > kmax)]
        )
        pmf = np.array([sigma * (1 - sigma) ** (k - 1) for k in range(1, kmax + 1)])
        expected = np.append(pmf, 1.0 - pmf.sum()) * durations.size
        chi2 = np.sum((observed - expected) ** 2 / expected)
        pval = stats.chi2.sf(chi2, df=kmax)
        assert pval > 0.001

    def test_duration_mean_sigma_half(self):
        p = params(rho=0.6, sigma=0.5, omega0=0.0, omega1=0.0, n=1000)
        log, _ = simulate(p, 100, 100, seed=14)
        durations = np.array([e - s + 1 for _, _, s, e in log.steady_dissolutions])
        assert durations.size >= 10_000
        assert abs(durations.mean() - 2.0) < 0.05 * 2.0


class TestExportEdges:
    def test_empty_range(self):
        log = EventLog(base_iteration=0, last_iteration=10)
        assert export_edges(log, 3, 5) == []

    def test_single_row(self):
        log = EventLog(
            base_iteration=0,
            last_iteration=10,
            steady_formations=[(5, 3, 7)],
        )
        assert export_edges(log, 5, 5) == [(5, 3, 7, "steady")]

    def test_out_of_span(self):
        log = EventLog(base_iteration=2, last_iteration=10)
        with pytest.raises(ValueError):
            export_edges(log, 1, 5)
        with pytest.raises(ValueError):
            export_edges(log, 5, 11)

    def test_sorted_output(self):
        log = EventLog(
            base_iteration=0,
            last_iteration=3,
            steady_formations=[(2, 9, 10), (1, 5, 6)],
            casual_formations=[(2, 1, 2, False, False), (1, 3, 4, False, False)],
        )
        rows = export_edges(log, 1, 3)
        assert rows == sorted(rows, key=lambda r: (r[0], r[3], r[1], r[2]))
        assert rows[0] == (1, 3, 4, "casual")

    def test_cumulative_casual_count_matches_expectation(self):
        # expectation oracle: all nodes are casual-willing under omega0 =
        # omega1 = w, so each iteration forms floor(Binomial(n, w)/2) pairs,
        # about n*w/2 in expectation
        p = params(rho=0.3, sigma=0.1, omega0=0.4, omega1=0.4, n=1000)
        log, _ = simulate(p, 50, 12, seed=15)
        rows = export_edges(log, log.base_iteration + 1, log.base_iteration + 12)
        casual = [r for r in rows if r[3] == "casual"]
        expected = 12 * p.n * 0.4 / 2
        assert abs(len(casual) - expected) < 0.10 * expected
