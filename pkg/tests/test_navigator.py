import math

import pytest
from hypothesis import given, settings, strategies as st

from kvcontinuum.continuum import CostVector, DesignKnobs, DomainError, Environment, preset
from kvcontinuum.navigator import WorkloadMix, auto_design, navigate, theta
from kvcontinuum.rng import SplitMix64

N, E, B, F = 2**20, 1024, 32, 32


def make_env():
    mf = math.ceil(N * (F / B + 10))
    mb = 2 * 8 * 1024 * 1024
    return Environment(n_entries=N, entry_bits=E, entries_per_page=B, key_bits=F,
                       total_memory_bits=mf + mb, page_bytes=4096)


def lazy_leveled_start(env):
    return DesignKnobs(growth_factor=10, hot_merge_threshold=9, cold_merge_threshold=1,
                       node_size_pages=1,
                       fence_filter_memory_bits=math.ceil(N * (F / B + 10)),
                       buffer_memory_bits=2 * 8 * 1024 * 1024)


def costs(r=2.0, v=1.0, q=4.0, c=10.0, w=0.5):
    return CostVector(zero_point_read=r, point_read=v, short_range=q,
                      long_range=c, update=w, memory_footprint=0.0)


class TestTheta:
    def test_single_term(self):
        mix = WorkloadMix(zero_point_frac=1.0)
        assert theta(costs(), mix) == 2.0

    def test_uniform_hand_sum(self):
        mix = WorkloadMix(0.2, 0.2, 0.2, 0.2, 0.2)
        assert theta(costs(), mix) == pytest.approx(3.5)

    def test_equal_costs_any_mix(self):
        rng = SplitMix64(7)
        for _ in range(20):
            raw = [rng.random() for _ in range(5)]
            s = sum(raw)
            mix = WorkloadMix(*(x / s for x in raw))
            assert theta(costs(1, 1, 1, 1, 1), mix) == pytest.approx(1.0)

    def test_mix_must_sum_to_one(self):
        with pytest.raises(DomainError):
            WorkloadMix(0.5, 0.5, 0.5, 0.0, 0.0)

    @given(st.floats(0, 1), st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_linearity_in_mix(self, a, seed):
        rng = SplitMix64(seed)

        def rand_mix():
            raw = [rng.random() + 1e-9 for _ in range(5)]
            s = sum(raw)
            return [x / s for x in raw]

        m1, m2 = rand_mix(), rand_mix()
        blended = WorkloadMix(*(a * x + (1 - a) * y for x, y in zip(m1, m2)))
        cv = costs()
        lhs = theta(cv, blended)
        rhs = a * theta(cv, WorkloadMix(*m1)) + (1 - a) * theta(cv, WorkloadMix(*m2))
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


class TestNavigate:
    def test_update_heavy_moves_z_first(self):
        env = make_env()
        start = lazy_leveled_start(env)
        trace = navigate(env, WorkloadMix(update_frac=0.8, point_frac=0.2), start)
        assert len(trace.steps) >= 2
        first = trace.steps[1][0]
        assert first.cold_merge_threshold > start.cold_merge_threshold
        assert first.hot_merge_threshold == start.hot_merge_threshold
        assert first.growth_factor == start.growth_factor

    def test_short_range_heavy_moves_k_first(self):
        env = make_env()
        start = lazy_leveled_start(env)
        trace = navigate(env, WorkloadMix(short_range_frac=0.8, point_frac=0.2), start)
        first = trace.steps[1][0]
        assert first.hot_merge_threshold < start.hot_merge_threshold
        assert first.cold_merge_threshold == start.cold_merge_threshold
        assert first.growth_factor == start.growth_factor

    def test_theta_non_increasing(self):
        env = make_env()
        start = lazy_leveled_start(env)
        rng = SplitMix64(5)
        for _ in range(10):
            raw = [rng.random() for _ in range(5)]
            s = sum(raw)
            trace = navigate(env, WorkloadMix(*(x / s for x in raw)), start)
            thetas = [t for _, t in trace.steps]
            assert all(a >= b - 1e-12 for a, b in zip(thetas, thetas[1:]))

    def test_already_optimal_start_single_step(self):
        # Micro-grid oracle: exhaustively minimize theta over a small knob
        # grid, then navigate from the winner.
        env = make_env()
        mix = WorkloadMix(update_frac=1.0)
        best = None
        for t in (2, 4, 8, 16, 32, 64, 256, 1024, 8192, 32768):
            for k in sorted({1, t - 1}):
                for z in sorted({1, t - 1}):
                    knobs = DesignKnobs(t, k, z, 1,
                                        env.total_memory_bits - B * E, B * E)
                    try:
                        from kvcontinuum.continuum import cost
                        th = theta(cost(env, knobs), mix)
                    except DomainError:
                        continue
                    if best is None or th < best[1]:
                        best = (knobs, th)
        trace = navigate(env, mix, best[0])
        assert len(trace.steps) == 1
        assert trace.final == best[0]

    def test_navigate_within_ten_percent_of_auto_on_100_mixes(self):
        env = make_env()
        start = lazy_leveled_start(env)
        rng = SplitMix64(123)
        for _ in range(100):
            raw = [rng.random() for _ in range(5)]
            s = sum(raw)
            mix = WorkloadMix(*(x / s for x in raw))
            nav_theta = navigate(env, mix, start).steps[-1][1]
            _, auto_theta = auto_design(env, mix)
            assert nav_theta <= auto_theta * 1.10 + 1e-12


class TestAutoDesign:
    def test_pure_updates_pick_log_like(self):
        env = make_env()
        knobs, _ = auto_design(env, WorkloadMix(update_frac=1.0))
        assert knobs.hot_merge_threshold == knobs.growth_factor - 1
        assert knobs.cold_merge_threshold == knobs.growth_factor - 1

    def test_pure_long_range_picks_sorted_array_end(self):
        env = make_env()
        knobs, _ = auto_design(env, WorkloadMix(long_range_frac=1.0))
        assert knobs.hot_merge_threshold == 1
        assert knobs.cold_merge_threshold == 1
        # Maximal T on the grid: a single-level structure.
        from kvcontinuum.continuum import derive
        assert derive(env, knobs).levels == 1

    def test_never_worse_than_any_preset(self):
        from kvcontinuum.continuum import PRESET_NAMES, cost
        env = make_env()
        rng = SplitMix64(9)
        for _ in range(15):
            raw = [rng.random() for _ in range(5)]
            s = sum(raw)
            mix = WorkloadMix(*(x / s for x in raw))
            _, auto_theta = auto_design(env, mix)
            for name in PRESET_NAMES:
                try:
                    preset_theta = theta(cost(env, preset(name, env)), mix)
                except DomainError:
                    continue
                assert auto_theta <= preset_theta + 1e-9

    def test_deterministic(self):
        env = make_env()
        mix = WorkloadMix(0.2, 0.2, 0.2, 0.2, 0.2)
        assert auto_design(env, mix) == auto_design(env, mix)

    def test_trace_serializes(self):
        env = make_env()
        trace = navigate(env, WorkloadMix(update_frac=1.0), lazy_leveled_start(env))
        data = trace.to_json()
        assert data["final"] == trace.final.to_json()
        assert len(data["steps"]) == len(trace.steps)
