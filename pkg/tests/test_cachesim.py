"""
LRU 模拟器测试
"""
import csv

import pytest

from cachepilot.cachesim import (RUN_STATS_COLUMNS, AccessResult, RunStats, new_cache, run_trace, steady_hit_rate,
                                 steady_hit_rate_curve)
from cachepilot.errors import InvalidArgumentError
from cachepilot.models import KEYS_PER_GB, CacheConfig, DistributionSpec, Family, LatencyModel
from cachepilot.workload import generate_trace, keyspace_from_gb

LATENCY = LatencyModel()
UNIFORM = DistributionSpec(family=Family.UNIFORM)


def slots_cache(slots: int):
    return new_cache(CacheConfig(capacity_gb=slots / KEYS_PER_GB))


class TestLRUCache:

    def test_slots(self):
        assert CacheConfig(capacity_gb=0.3).slots == 3072
        assert slots_cache(2).slots == 2

    def test_evicts_least_recently_used(self):
        cache = slots_cache(2)
        assert cache.access("a") == AccessResult.MISS
        assert cache.access("b") == AccessResult.MISS
        assert cache.access("a") == AccessResult.HIT
        assert cache.access("c") == AccessResult.MISS
        assert "b" not in cache
        assert cache.lru_order() == ["a", "c"]

    def test_hit_moves_to_mru_end(self):
        cache = slots_cache(3)
        for key in (1, 2, 3, 1):
            cache.touch(key)
        assert cache.lru_order() == [2, 3, 1]

    def test_resize_down_evicts_from_lru_end(self):
        cache = slots_cache(4)
        for key in range(4):
            cache.touch(key)
        evicted = cache.resize(2 / KEYS_PER_GB)
        assert evicted == 2
        assert cache.lru_order() == [2, 3]

    def test_resize_up_keeps_contents(self):
        cache = slots_cache(2)
        cache.touch(1)
        cache.touch(2)
        assert cache.resize(10 / KEYS_PER_GB) == 0
        assert cache.lru_order() == [1, 2]
        cache.touch(3)
        assert len(cache) == 3

    def test_resize_to_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            slots_cache(2).resize(0.0)

    def test_capacity_below_one_slot(self):
        with pytest.raises(Exception):
            CacheConfig(capacity_gb=1e-6)

    def test_per_node_capacity(self):
        assert CacheConfig(capacity_gb=3.0, node_count=3).per_node_gb == pytest.approx(1.0)


class TestRunTrace:

    def test_windows_and_final_partial_window(self):
        cache = slots_cache(2)
        stats = run_trace(cache, [1, 1, 2, 2, 3], LATENCY, window=2)
        assert stats.hits == 2 and stats.misses == 3
        assert [r[0] for r in stats.records] == [2, 4, 5]
        assert [r[1] for r in stats.records] == [50.0, 50.0, 0.0]
        assert stats.cumulative_hit_rate_pct == pytest.approx(40.0)

    def test_window_latency(self):
        stats = run_trace(slots_cache(2), [1, 1, 1, 1], LATENCY, window=4)
        assert stats.records[0][3] == pytest.approx(0.75 * 1.49 + 0.25 * 4.93)

    def test_split_runs_align_windows(self):
        keys = [1, 2, 1, 2, 3, 4]
        cache = slots_cache(2)
        stats = run_trace(cache, keys, LATENCY, window=2, stop=3)
        assert [r[0] for r in stats.records] == [2]
        cache.resize(4 / KEYS_PER_GB)
        run_trace(cache, keys, LATENCY, window=2, stats=stats, start=3)
        assert [r[0] for r in stats.records] == [2, 4, 6]
        assert [r[4] for r in stats.records][-1] == pytest.approx(4 / KEYS_PER_GB)
        whole = run_trace(slots_cache(2), keys, LATENCY, window=2)
        assert stats.hits + stats.misses == whole.hits + whole.misses

    def test_resume_must_continue_where_stopped(self):
        stats = run_trace(slots_cache(2), [1, 2, 3], LATENCY, window=1, stop=2)
        with pytest.raises(InvalidArgumentError):
            run_trace(slots_cache(2), [1, 2, 3], LATENCY, window=1, stats=stats, start=1)

    def test_invalid_window(self):
        with pytest.raises(InvalidArgumentError):
            run_trace(slots_cache(2), [1], LATENCY, window=0)

    def test_phase_ids_follow_trace(self):
        from cachepilot.workload import concat_phases, parse_distribution
        trace = concat_phases([(UNIFORM, 100), (parse_distribution("zipf", 1.0), 100)], keyspace_from_gb(0.1), 1)
        stats = run_trace(slots_cache(50), trace, LATENCY, window=50)
        assert [r[5] for r in stats.records] == [0, 0, 1, 1]

    def test_hit_rate_between(self):
        stats = run_trace(slots_cache(1), [1, 1, 1, 2], LATENCY, window=10)
        assert stats.hit_rate_between(1, 3) == pytest.approx(100.0)
        assert stats.hit_rate_between(0, 4) == pytest.approx(50.0)
        with pytest.raises(InvalidArgumentError):
            stats.hit_rate_between(2, 9)

    def test_csv(self, tmp_path):
        stats = run_trace(slots_cache(2), [1, 1, 2], LATENCY, window=2)
        path = stats.to_csv(tmp_path / "ts.csv")
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == RUN_STATS_COLUMNS
        assert len(rows) == 3

    def test_empty_stats(self):
        stats = RunStats(window=10)
        assert stats.queries == 0
        assert stats.cumulative_hit_rate_pct == 0.0


class TestLatencyModel:

    def test_identity_at_measured_hit_rate(self):
        assert LATENCY.mean_latency(0.918) == pytest.approx(1.77, abs=0.01)

    def test_endpoints(self):
        assert LATENCY.mean_latency(1.0) == pytest.approx(1.49)
        assert LATENCY.mean_latency(0.0) == pytest.approx(4.93)

    def test_hit_must_be_faster(self):
        with pytest.raises(Exception):
            LatencyModel(hit_ms=5.0, miss_ms=1.0)


class TestSteadyHitRate:

    def test_uniform_matches_capacity_ratio(self):
        """均匀访问的稳态命中率 ≈ 槽位数 / 键数"""
        rate = steady_hit_rate(UNIFORM, keyspace_from_gb(3.0), 2.7, 500_000, 0.5, seed=1)
        assert rate == pytest.approx(90.0, abs=2.0)

    def test_curve_matches_pointwise_runs(self):
        spec = DistributionSpec(family=Family.ZIPF, param=0.8)
        keyspace = keyspace_from_gb(0.5)
        grid = [0.05, 0.1, 0.2, 0.4]
        curve = steady_hit_rate_curve(spec, keyspace, grid, 20_000, 0.5, seed=4)
        points = [steady_hit_rate(spec, keyspace, c, 20_000, 0.5, seed=4) for c in grid]
        assert curve == points
        assert all(a <= b for a, b in zip(curve, curve[1:]))

    def test_warmup_fraction_range(self):
        with pytest.raises(InvalidArgumentError):
            steady_hit_rate(UNIFORM, keyspace_from_gb(0.1), 0.05, 1000, 1.0, seed=1)

    def test_deterministic(self):
        args = (DistributionSpec(family=Family.EXPONENTIAL, param=1.0), keyspace_from_gb(0.5), 0.1, 10_000, 0.5, 9)
        assert steady_hit_rate(*args) == steady_hit_rate(*args)


def test_trace_object_replay_matches_key_list():
    trace = generate_trace(UNIFORM, keyspace_from_gb(0.1), 2000, seed=2)
    a = run_trace(slots_cache(300), trace, LATENCY, window=100)
    b = run_trace(slots_cache(300), trace.keys.tolist(), LATENCY, window=100)
    assert a.hits == b.hits
    assert [r[:4] for r in a.records] == [r[:4] for r in b.records]
