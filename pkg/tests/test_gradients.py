import pytest

from kvcontinuum.continuum import Environment, FPR_BASE
from kvcontinuum.simulator import IOStats, SimConfig, run_trace
from kvcontinuum.workloads import WorkloadSpec, generate
from kvcontinuum.gradients import (
    COMPONENTS,
    EmptyStats,
    MemoryPoint,
    bloom_realloc_check,
    descend_on_grid,
    estimate_gradients,
    follow_arrows,
    grid_sweep,
    sgd_descend,
    simplex_lattice,
    validate_gradients,
)

E, B = 64, 64


def make_env(n=2**14):
    return Environment(n_entries=n, entry_bits=E, entries_per_page=B, key_bits=32,
                       total_memory_bits=2**22, page_bytes=B * E // 8)


def make_config(env=None, **kwargs):
    env = env or make_env()
    base = dict(growth_factor=2, cache_bits=2**15, buffer_bits=2**16,
                bloom_bits=2**15, seed=29)
    base.update(kwargs)
    return SimConfig(env=env, **base)


class TestEstimators:
    def test_cache_formula_direct(self):
        # 50 last-slot hits at 2.5 I/Os per query and one extra entry
        # (dM = E) predict 125 saved I/Os.
        stats = IOStats()
        stats.query_count = 1000
        stats.read_io = 2500
        stats.last_cache_slot_hits = 50
        config = make_config()
        grad = estimate_gradients(stats, config, delta_bits=E)
        assert grad.cache_savings == pytest.approx(125.0)

    def test_zero_bloom_traffic_zero_savings(self):
        stats = IOStats()
        stats.query_count = 10
        config = make_config()
        grad = estimate_gradients(stats, config, delta_bits=64)
        assert grad.bloom_savings == 0.0

    def test_bloom_one_extra_bit_per_entry(self):
        # 10 -> 11 bits/entry with 1000 rejectable lookups:
        # (0.6185^10 - 0.6185^11) * 1000 = 3.1252990644350467 (frozen).
        stats = IOStats()
        stats.query_count = 1000
        stats.bloom_false_events[1] = 1000
        stats.fp_roll[1] = (FPR_BASE ** 10, 1000)
        stats.fpp_roll[1] = (FPR_BASE ** 11, 1000)
        config = make_config()
        grad = estimate_gradients(stats, config, delta_bits=config.grad_delta_bits)
        assert grad.bloom_savings == pytest.approx(3.1252990644350467)

    def test_empty_stats_rejected(self):
        with pytest.raises(EmptyStats):
            estimate_gradients(IOStats(), make_config())

    def test_estimators_consume_stats_only(self):
        # The O(1) contract: a stats object detached from any SimState is
        # all the estimator may read.
        spec = WorkloadSpec(kind="uniform", op_count=3000, key_space=2**12,
                            write_prob=0.4, seed=8)
        config = make_config()
        stats = run_trace(config, generate(spec))
        grad = estimate_gradients(stats, config)
        assert all(x == x for x in (grad.cache_savings, grad.buffer_savings,
                                    grad.bloom_savings))  # finite


class TestSimplexLattice:
    def test_resolution_three_has_six_points(self):
        points = simplex_lattice(3)
        assert len(points) == 6
        assert (2, 0, 0) in points and (0, 2, 0) in points and (0, 0, 2) in points

    @pytest.mark.parametrize("r", [2, 5, 15])
    def test_count_formula(self, r):
        points = simplex_lattice(r)
        assert len(points) == r * (r + 1) // 2
        assert all(sum(p) == r - 1 and min(p) >= 0 for p in points)

    def test_resolution_15_is_120_cells(self):
        assert len(simplex_lattice(15)) == 120


@pytest.fixture(scope="module")
def sweep():
    env = make_env()
    spec = WorkloadSpec(kind="uniform", op_count=6000, key_space=2**12,
                        write_prob=0.5, seed=3)
    base = SimConfig(env=env, growth_factor=4, seed=5)
    return grid_sweep(spec, env, 8, base_config=base, total_bits=7 * 8 * 4096)


class TestGridSweep:

    def test_all_cells_simulated(self, sweep):
        assert len(sweep) == 8 * 9 // 2

    def test_all_cache_corner_not_better_than_optimum(self, sweep):
        by_cell = {tuple(r["cell"]): r for r in sweep}
        corner = by_cell[(7, 0, 0)]
        best = min(r["total_io"] for r in sweep)
        assert corner["total_io"] >= best

    def test_arrow_at_minimum_has_no_strictly_better_target(self, sweep):
        by_cell = {tuple(r["cell"]): r for r in sweep}
        best = min(sweep, key=lambda r: r["total_io"])
        if best["arrow_from"] != "none":
            src = COMPONENTS.index(best["arrow_from"])
            dst = COMPONENTS.index(best["arrow_to"])
            nxt = list(best["cell"])
            nxt[src] -= 1
            nxt[dst] += 1
            neighbor = by_cell.get(tuple(nxt))
            if neighbor is not None:
                assert neighbor["total_io"] >= best["total_io"]

    def test_reproducible_bit_exact(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=2000, key_space=2**11,
                            write_prob=0.5, seed=9)
        base = SimConfig(env=env, growth_factor=4, seed=7)
        r1 = grid_sweep(spec, env, 4, base_config=base, total_bits=3 * 8 * 4096)
        r2 = grid_sweep(spec, env, 4, base_config=base, total_bits=3 * 8 * 4096)
        assert r1 == r2

    def test_parallel_matches_serial(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=2000, key_space=2**11,
                            write_prob=0.5, seed=9)
        base = SimConfig(env=env, growth_factor=4, seed=7)
        serial = grid_sweep(spec, env, 4, base_config=base, total_bits=3 * 8 * 4096)
        parallel = grid_sweep(spec, env, 4, base_config=base,
                              total_bits=3 * 8 * 4096, jobs=2)
        assert serial == parallel


class TestDescent:
    def test_round_robin_predicted_min_has_no_cache(self):
        env = make_env(n=2**15)
        spec = WorkloadSpec(kind="round_robin", op_count=20_000, key_space=2**15,
                            write_prob=0.5, seed=3)
        base = SimConfig(env=env, growth_factor=4, seed=5)
        total = 7 * 16 * 4096
        rows = grid_sweep(spec, env, 8, base_config=base, total_bits=total)
        for r in rows:
            _, best = descend_on_grid(rows, r["cell"])
            assert best[0] == 0

    def test_sgd_round_robin_drains_cache(self):
        env = make_env(n=2**15)
        spec = WorkloadSpec(kind="round_robin", op_count=6000, key_space=2**15,
                            write_prob=0.5, seed=3)
        base = SimConfig(env=env, growth_factor=4, seed=5)
        start = MemoryPoint(cache_bits=2**15, buffer_bits=2**15, bloom_bits=2**15)
        out = sgd_descend(spec, env, start, base_config=base, step_bits=2**13)
        assert out["predicted_min"].cache_bits == 0

    def test_sgd_from_grid_optimum_stops_fast(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=6000, key_space=2**12,
                            write_prob=0.5, seed=3)
        base = SimConfig(env=env, growth_factor=4, seed=5)
        total = 7 * 8 * 4096
        rows = grid_sweep(spec, env, 8, base_config=base, total_bits=total)
        best = min(rows, key=lambda r: r["total_io"])
        start = MemoryPoint(best["cache_bits"], best["buffer_bits"], best["bloom_bits"])
        out = sgd_descend(spec, env, start, base_config=base, step_bits=total // 7)
        assert len(out["trajectory"]) <= 2
        assert out["predicted_min"] in out["trajectory"][:2]

    def test_sgd_conserves_total_memory(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=4000, key_space=2**12,
                            write_prob=0.5, seed=4)
        base = SimConfig(env=env, growth_factor=4, seed=5)
        start = MemoryPoint(2**14, 2**15, 2**14)
        out = sgd_descend(spec, env, start, base_config=base, step_bits=4096)
        total = start.total()
        for point in out["trajectory"]:
            assert point.total() == total
            assert min(point.cache_bits, point.buffer_bits, point.bloom_bits) >= 0

    def test_sgd_deterministic(self):
        env = make_env()
        spec = WorkloadSpec(kind="zipf", op_count=4000, key_space=2**12,
                            zipf_s=1.3, write_prob=0.5, seed=4)
        base = SimConfig(env=env, growth_factor=4, seed=5)
        start = MemoryPoint(2**14, 2**15, 2**14)
        a = sgd_descend(spec, env, start, base_config=base, step_bits=4096)
        b = sgd_descend(spec, env, start, base_config=base, step_bits=4096)
        assert a == b


@pytest.fixture(scope="module")
def realloc_setup():
    env = make_env()
    base = SimConfig(env=env, growth_factor=2, cache_bits=2**12,
                     buffer_bits=2**14, bloom_bits=10 * 2**13, seed=29)
    spec = WorkloadSpec(kind="zipf", op_count=15_000, seed=11, key_space=2**13,
                        zipf_s=1.2, write_prob=0.3)
    return env, base, spec


class TestBloomRealloc:

    def test_monkey_leaves_less_than_one_io(self, realloc_setup):
        env, base, spec = realloc_setup
        out = bloom_realloc_check(spec, env, "monkey", base_config=base)
        assert max(out["matrix"].values()) < 1.0

    def test_baseline_even_leaves_io_on_the_table(self, realloc_setup):
        env, base, spec = realloc_setup
        out = bloom_realloc_check(spec, env, "baseline_even", base_config=base)
        assert max(out["matrix"].values()) >= 1.0

    def test_diagonal_is_zero(self, realloc_setup):
        env, base, spec = realloc_setup
        out = bloom_realloc_check(spec, env, "monkey", base_config=base)
        levels = {i for i, _ in out["matrix"]}
        for i in levels:
            assert out["matrix"][(i, i)] == 0.0


class TestValidation:
    def test_zero_delta_zero_savings(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=3000, key_space=2**12,
                            write_prob=0.5, seed=7)
        base = make_config(env)
        report = validate_gradients(spec, env, trials=2, base_config=base,
                                    delta_bits=0)
        for comp in COMPONENTS:
            assert report[comp]["estimated_mean"] == 0.0
            assert report[comp]["actual_mean"] == 0.0

    def test_zero_traffic_component(self):
        # Everything stays buffer-resident: the filters never see a query,
        # so both the estimate and the paired actual are zero.
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=500, key_space=64,
                            write_prob=0.9, seed=7)
        base = make_config(env, buffer_bits=2**16)
        report = validate_gradients(spec, env, trials=4, base_config=base,
                                    delta_bits=4096)
        assert report["bloom"]["estimated_mean"] == 0.0
        assert report["bloom"]["actual_mean"] == 0.0

    def test_paired_trials_share_traces(self):
        env = make_env()
        spec = WorkloadSpec(kind="uniform", op_count=4000, key_space=2**12,
                            write_prob=0.5, seed=7)
        base = make_config(env)
        r1 = validate_gradients(spec, env, trials=4, base_config=base, delta_bits=64)
        r2 = validate_gradients(spec, env, trials=4, base_config=base, delta_bits=64)
        assert r1 == r2
