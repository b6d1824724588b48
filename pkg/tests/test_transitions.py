import math

import pytest
from hypothesis import given, settings, strategies as st

from kvcontinuum.continuum import Environment
from kvcontinuum.rng import SplitMix64
from kvcontinuum.simulator import Run, SimConfig, SimState
from kvcontinuum.transitions import (
    BTreeState,
    IndirectionParams,
    PhaseOp,
    TransitionState,
    build_region_map,
    choose_strategy,
    execute_lsm_to_btree,
    hybrid_benefit,
    plan_btree_to_lsm,
    plan_gradual,
    preemptive_geometric,
    resolve_page,
    sim_state_to_transition_state,
    transition_costs,
)

# d = 64 bytes, p = 4096 bytes -> B = 64 entries/page, E = 512 bits.
D_BYTES, P_BYTES = 64, 4096
B = P_BYTES // D_BYTES
E_BITS = D_BYTES * 8


def t_state(levels, phi=1.0, buffer_bytes=0):
    return TransitionState(level_entries=tuple(levels), entry_bytes=D_BYTES,
                           page_bytes=P_BYTES, write_read_ratio=phi,
                           buffer_bytes=buffer_bytes)


def make_env(n=2**16):
    return Environment(n_entries=n, entry_bits=E_BITS, entries_per_page=B,
                       key_bits=32, total_memory_bits=2**26, page_bytes=P_BYTES)


def state_with_levels(levels, distinct=True):
    """SimState with one run per level of the requested sizes."""
    env = make_env()
    cfg = SimConfig(env=env, growth_factor=4, buffer_bits=B * E_BITS, seed=1)
    sim = SimState(cfg)
    sim.levels = []
    start = 0
    for x in levels:
        keys = list(range(start, start + x))
        sim.levels.append([Run(keys)] if x else [])
        start += x if distinct else 0
    return sim


class TestClosedForms:
    def test_example_one(self):
        costs = transition_costs(t_state([100, 1000, 10000]))
        assert costs["sort_merge"] == 350
        assert costs["batch_insert"] == pytest.approx(3474.1875)
        assert costs["threshold_ratio"] == pytest.approx(0.005235602094240838)

    def test_example_two_bottom_heavy(self):
        costs = transition_costs(t_state([10, 100, 10**7]))
        assert costs["sort_merge"] == 312506
        assert costs["batch_insert"] == pytest.approx(156581.71875)
        assert costs["batch_insert"] < costs["sort_merge"]

    def test_empty_uppers_degenerate_to_index_build(self):
        costs = transition_costs(t_state([0, 0, 5000]))
        assert costs["batch_insert"] == math.ceil(D_BYTES * 5000 / P_BYTES)
        assert costs["batch_insert"] <= costs["sort_merge"]

    def test_lazy_bound_equals_sort_merge(self):
        costs = transition_costs(t_state([100, 1000, 10000]))
        assert costs["lazy_bound"] == costs["sort_merge"]

    def test_preemptive_geometric_matches_ceil_sum(self):
        # For exactly full levels s0*T^i the geometric form differs from
        # the per-level ceils only by rounding (at most s0/p + L pages).
        s0, t, lvl, phi = 8192, 4, 5, 1.0
        geo = preemptive_geometric(s0, t, lvl, P_BYTES, phi)
        ssum = (1 + phi) * sum(math.ceil(s0 * t ** i / P_BYTES) for i in range(1, lvl + 1))
        assert abs(geo - ssum) <= (1 + phi) * (s0 / P_BYTES + lvl)


class TestChooseStrategy:
    def test_example_one_sort_merge(self):
        state = t_state([100, 1000, 10000])
        assert 1100 / 10000 > transition_costs(state)["threshold_ratio"]
        assert choose_strategy(state) == "sort_merge"

    def test_example_two_batch_insert(self):
        state = t_state([10, 100, 10**7])
        assert 110 / 10**7 < transition_costs(state)["threshold_ratio"]
        assert choose_strategy(state) == "batch_insert"

    def test_threshold_anchor_at_half_page_entries(self):
        # With entries half a page wide and phi = 1 the pivot is exactly
        # 0.2: d/(p + (2p - d)) = 2048/10240.
        state = TransitionState(level_entries=(100, 10_000), entry_bytes=2048,
                                page_bytes=4096, write_read_ratio=1.0)
        assert transition_costs(state)["threshold_ratio"] == pytest.approx(0.2)

    def test_boundary_ties_to_sort_merge(self):
        # Construct a state sitting exactly on the threshold ratio.
        x_last = 12224_000
        thr = transition_costs(t_state([1, x_last]))["threshold_ratio"]
        x_upper = round(thr * x_last)
        state = t_state([x_upper, x_last])
        if x_upper / x_last == pytest.approx(thr, abs=0):
            assert choose_strategy(state) == "sort_merge"

    def test_agreement_with_argmin_on_randomized_states(self):
        # Aligned (page-multiple) level sizes: ceilings vanish and the
        # threshold inequality is exactly the argmin of the closed forms.
        rng = SplitMix64(2024)
        for _ in range(1000):
            lvl = 2 + rng.randint(4)
            levels = [B * (1 + rng.randint(200)) for _ in range(lvl - 1)]
            levels.append(B * (100 + rng.randint(5000)))
            state = t_state(levels, phi=1.0)
            costs = transition_costs(state)
            by_min = "batch_insert" if costs["batch_insert"] < costs["sort_merge"] \
                else "sort_merge"
            assert choose_strategy(state) == by_min


class TestGradualPlan:
    def test_single_step_when_k_covers_everything(self):
        state = t_state([128, 1024])
        total_pages = math.ceil(D_BYTES * 1152 / P_BYTES)
        plan = plan_gradual(state, total_pages)
        assert len(plan.steps) == 1
        reads, writes, theta = plan.steps[0]
        assert reads == sum(math.ceil(D_BYTES * x / P_BYTES) for x in (128, 1024))
        assert writes == total_pages

    def test_k1_partitions_pages(self):
        state = t_state([B * 4, B * 6])   # 10 output pages
        plan = plan_gradual(state, 1)
        assert len(plan.steps) == 10
        assert sum(r for r, _, _ in plan.steps) == 10
        assert sum(w for _, w, _ in plan.steps) == 10

    def test_thresholds_strictly_increase(self):
        state = t_state([500, 3000, 11000])
        plan = plan_gradual(state, 3)
        thetas = [s[2] for s in plan.steps]
        assert all(a < b for a, b in zip(thetas, thetas[1:]))

    def test_total_matches_sort_merge_data_movement(self):
        rng = SplitMix64(5)
        for _ in range(50):
            levels = [1 + rng.randint(9000) for _ in range(2 + rng.randint(3))]
            state = t_state(levels)
            k = 1 + rng.randint(7)
            plan = plan_gradual(state, k)
            reads = sum(r for r, _, _ in plan.steps)
            writes = sum(w for _, w, _ in plan.steps)
            assert reads == sum(math.ceil(D_BYTES * x / P_BYTES) for x in levels)
            assert writes == math.ceil(D_BYTES * sum(levels) / P_BYTES)
            assert plan.predicted_io == reads + state.write_read_ratio * writes


class TestExecute:
    def test_sort_merge_equality_on_aligned_state(self):
        levels = [B * 2, B * 16, B * 157]
        sim = state_with_levels(levels)
        t = sim_state_to_transition_state(sim)
        predicted = transition_costs(t)["sort_merge"]
        btree, measured = execute_lsm_to_btree(sim, "sort_merge")
        assert measured["io"] == predicted
        assert btree.distinct_keys() == set(range(B * 175))

    def test_sort_merge_never_exceeds_prediction(self):
        rng = SplitMix64(77)
        for _ in range(60):
            levels = [1 + rng.randint(3000) for _ in range(2 + rng.randint(3))]
            sim = state_with_levels(levels)
            t = sim_state_to_transition_state(sim)
            _, measured = execute_lsm_to_btree(sim, "sort_merge")
            assert measured["io"] <= transition_costs(t)["sort_merge"]

    def test_batch_insert_bounded_by_closed_form(self):
        rng = SplitMix64(99)
        for _ in range(60):
            uppers = [B + rng.randint(2000) for _ in range(1 + rng.randint(3))]
            levels = uppers + [B * (50 + rng.randint(400))]
            sim = state_with_levels(levels)
            t = sim_state_to_transition_state(sim)
            btree, measured = execute_lsm_to_btree(sim, "batch_insert")
            assert measured["io"] <= transition_costs(t)["batch_insert"]
            assert btree.distinct_keys() == set(range(sum(levels)))

    def test_bottom_only_batch_insert_reads_index_only(self):
        levels = [0, 0, B * 100]
        sim = state_with_levels(levels)
        _, measured = execute_lsm_to_btree(sim, "batch_insert")
        assert measured["page_reads"] == 100
        assert measured["page_writes"] == 0

    def test_single_entry_split_bound(self):
        # One upper entry into one full leaf: one source page, one leaf
        # read, at most two leaf writes.
        sim = state_with_levels([1, B * 10])
        btree, measured = execute_lsm_to_btree(sim, "batch_insert")
        assert measured["page_reads"] <= 10 + 1 + 1
        assert measured["page_writes"] <= 2
        assert btree.distinct_keys() == set(range(B * 10 + 1))

    def test_key_set_preserved_with_duplicates(self):
        sim = state_with_levels([B * 2, B * 4], distinct=False)
        expected = sim.distinct_keys()
        for strategy in ("sort_merge", "batch_insert"):
            sim2 = state_with_levels([B * 2, B * 4], distinct=False)
            btree, _ = execute_lsm_to_btree(sim2, strategy)
            assert btree.distinct_keys() == expected


class TestBtreeToLsm:
    def test_indirection_costs_zero_io(self):
        env = make_env()
        for frag in (0.0, 0.3, 1.0):
            params = IndirectionParams(fragmentation=frag)
            out = plan_btree_to_lsm(env, params, "indirection")
            assert out["transition_io"] == 0

    def test_first_merge_delta_endpoints(self):
        env = make_env()
        ne = env.n_entries * env.entry_bits
        zero = plan_btree_to_lsm(env, IndirectionParams(fragmentation=0.0), "indirection")
        one = plan_btree_to_lsm(env, IndirectionParams(fragmentation=1.0), "indirection")
        assert zero["first_merge_delta_units"] <= 0
        r, c = 2.0, 1.0
        assert one["first_merge_delta_units"] == pytest.approx(ne * r - c)
        assert one["first_merge_delta_units"] > 0

    def test_naive_direct_evaluation(self):
        # alpha=1, x=0.5, N*E=1e6 -> 0.5e6 + 0.5e6 + 1e6 = 2e6 cost units.
        env = Environment(n_entries=10**6, entry_bits=1, entries_per_page=4096 * 8,
                          key_bits=1, total_memory_bits=2**26, page_bytes=4096)
        out = plan_btree_to_lsm(env, IndirectionParams(fragmentation=0.5), "naive")
        assert out["transition_cost_units"] == pytest.approx(2.0e6)


class TestRegionMap:
    def test_offset_arithmetic(self):
        rmap = build_region_map([(0, 100, 10), (10, 500, 10)])
        assert resolve_page(rmap, 13) == 503
        assert resolve_page(rmap, 0) == 100
        assert resolve_page(rmap, 9) == 109

    def test_fully_contiguous_is_one_region(self):
        rmap = build_region_map([(0, 7000, 12345)])
        assert len(rmap.regions) == 1
        assert resolve_page(rmap, 12344) == 7000 + 12344

    def test_out_of_range(self):
        rmap = build_region_map([(0, 0, 4)])
        with pytest.raises(IndexError):
            resolve_page(rmap, 4)

    def test_memory_bound(self):
        # Region count <= ceil(x * total_pages) + 1 with x the fraction of
        # discontinuities.
        rng = SplitMix64(31)
        for _ in range(30):
            total = 50 + rng.randint(500)
            runs = []
            start = 0
            loc = 1000
            while start < total:
                length = min(1 + rng.randint(19), total - start)
                runs.append((start, loc, length))
                start += length
                loc += length + 1 + rng.randint(40)
            rmap = build_region_map(runs)
            breaks = len(runs) - 1
            x = breaks / total
            assert len(rmap.regions) <= math.ceil(x * total) + 1

    @given(st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=25),
           st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=40, deadline=None)
    def test_resolve_agrees_with_flat_table(self, lengths, base):
        runs = []
        flat = []
        start = 0
        loc = base
        for length in lengths:
            runs.append((start, loc, length))
            flat.extend(loc + i for i in range(length))
            start += length
            loc += length + 7
        rmap = build_region_map(runs)
        for pid in range(start):
            assert resolve_page(rmap, pid) == flat[pid]


class TestHybrid:
    def _phases(self, env, scan_heavy_first=True, ops=800, initial=2048):
        rng = SplitMix64(9)
        next_key = initial
        scan_phase = []
        for _ in range(ops):
            r = rng.random()
            if r < 0.7:
                scan_phase.append(PhaseOp("scan", rng.randint(initial), pages=2))
            elif r < 0.9:
                scan_phase.append(PhaseOp("read", rng.randint(initial)))
            else:
                scan_phase.append(PhaseOp("insert", next_key))
                next_key += 1
        write_phase = []
        for _ in range(ops):
            if rng.random() < 0.8:
                write_phase.append(PhaseOp("insert", next_key))
                next_key += 1
            else:
                write_phase.append(PhaseOp("read", rng.randint(next_key)))
        return [scan_phase, write_phase] if scan_heavy_first else [write_phase, scan_phase]

    def _config(self, env):
        return SimConfig(env=env, growth_factor=2, buffer_bits=64 * E_BITS, seed=3)

    def test_two_phase_hybrid_beats_both_pures(self):
        env = make_env(n=2**14)
        out = hybrid_benefit(self._phases(env), list(range(2048)), self._config(env))
        totals = out["totals"]
        assert totals["hybrid"] < totals["btree"]
        assert totals["hybrid"] < totals["lsm"]

    def test_single_phase_no_transition(self):
        env = make_env(n=2**14)
        phases = self._phases(env)[:1]
        out = hybrid_benefit(phases, list(range(2048)), self._config(env))
        assert out["transitions"] == []
        assert out["totals"]["hybrid"] == out["totals"]["btree"]

    def test_lsm_to_btree_boundary_charges_closed_form(self):
        env = make_env(n=2**14)
        out = hybrid_benefit(self._phases(env, scan_heavy_first=False),
                             list(range(2048)), self._config(env))
        (transition,) = out["transitions"]
        assert transition["direction"] == "lsm_to_btree"
        planned = transition["planned"][transition["strategy"]]
        assert transition["io"] <= planned
        if transition["strategy"] == "sort_merge":
            assert transition["io"] == pytest.approx(planned)


def test_transition_state_validation():
    with pytest.raises(ValueError):
        t_state([0, 0, 0])
    with pytest.raises(ValueError):
        TransitionState((1, 2), entry_bytes=0, page_bytes=4096)
    with pytest.raises(ValueError):
        IndirectionParams(fragmentation=1.5)
    with pytest.raises(ValueError):
        IndirectionParams(random_read_cost=0.5, contiguous_read_cost=1.0)
