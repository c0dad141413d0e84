"""
访问序列生成测试
"""
import numpy as np
import pytest
from scipy import stats

from cachepilot.errors import FormatError, InvalidArgumentError
from cachepilot.models import DistributionSpec, Family, KeySpace
from cachepilot.workload import (X_EXP, YCSB_LIKE, concat_phases, derive_seed, generate_trace, keyspace_from_gb,
                                 make_rng, parse_distribution, read_trace, sample_key, sample_keys, write_trace)

UNIFORM = DistributionSpec(family=Family.UNIFORM)


class TestKeySpace:

    def test_one_gb(self):
        assert keyspace_from_gb(1.0).key_count == 10_240

    def test_three_gb(self):
        assert keyspace_from_gb(3.0).key_count == 30_720

    @pytest.mark.parametrize("data_gb", [0.0, -1.0])
    def test_non_positive_rejected(self, data_gb):
        with pytest.raises(InvalidArgumentError):
            keyspace_from_gb(data_gb)


class TestParseDistribution:

    def test_ycsb_alias(self):
        assert parse_distribution("ycsb-like") == YCSB_LIKE
        assert YCSB_LIKE.family == Family.ZIPF and YCSB_LIKE.param == 1.0

    def test_uniform_param_is_zero(self):
        assert parse_distribution("uniform", 1.7).param == 0.0

    def test_unknown_family(self):
        with pytest.raises(InvalidArgumentError):
            parse_distribution("pareto", 1.0)

    def test_skewed_family_needs_positive_param(self):
        with pytest.raises(InvalidArgumentError):
            parse_distribution("gaussian", 0.0)

    def test_label(self):
        assert parse_distribution("zipf", 0.7).label == "Zipf(0.7)"
        assert parse_distribution("uniform").label == "Uniform"


class TestSampling:

    def test_uniform_frequencies(self, rng):
        keyspace = KeySpace(data_gb=0.001, key_count=10)
        keys = sample_keys(UNIFORM, keyspace, 1_000_000, rng)
        freq = np.bincount(keys, minlength=10) / keys.size
        assert np.all(np.abs(freq - 0.1) <= 0.01)

    def test_zipf_two_keys_ratio(self, rng):
        keyspace = KeySpace(data_gb=0.001, key_count=2)
        spec = DistributionSpec(family=Family.ZIPF, param=1.0)
        counts = np.bincount(sample_keys(spec, keyspace, 1_000_000, rng), minlength=2)
        assert counts[0] / counts[1] == pytest.approx(2.0, rel=0.02)

    def test_exponential_matches_truncated_pmf(self, rng):
        """经验分布与截断指数分布的理论概率做卡方检验"""
        lam = 0.7
        keyspace = keyspace_from_gb(1.0)
        k = keyspace.key_count
        keys = sample_keys(DistributionSpec(family=Family.EXPONENTIAL, param=lam), keyspace, 1_000_000, rng)

        edges = np.arange(k + 1) / k * X_EXP
        cdf = 1.0 - np.exp(-lam * edges)
        pmf = np.diff(cdf) / cdf[-1]

        # 合并为每桶期望频数足够大的连续区间
        bins = np.linspace(0, k, 65).astype(int)
        observed = np.add.reduceat(np.bincount(keys, minlength=k), bins[:-1])
        expected = np.add.reduceat(pmf, bins[:-1]) * keys.size
        assert expected.min() >= 5
        assert stats.chisquare(observed, expected).pvalue > 0.01

    @pytest.mark.parametrize("family,param", [("uniform", 0.0), ("gaussian", 0.5), ("exponential", 2.0),
                                              ("zipf", 3.0)])
    def test_keys_in_range(self, rng, family, param):
        keyspace = keyspace_from_gb(0.5)
        keys = sample_keys(parse_distribution(family, param), keyspace, 50_000, rng)
        assert keys.min() >= 0 and keys.max() < keyspace.key_count

    def test_skewed_families_favor_small_keys(self, rng):
        keyspace = keyspace_from_gb(1.0)
        for family in ("gaussian", "exponential", "zipf"):
            keys = sample_keys(parse_distribution(family, 1.0), keyspace, 20_000, rng)
            assert np.median(keys) < keyspace.key_count / 4

    def test_zipf_head_share_grows_with_exponent(self, rng):
        """前1%的键占的访问比例随 ρ 严格增大"""
        keyspace = keyspace_from_gb(1.0)
        head = keyspace.key_count // 100
        shares = []
        for rho in (0.7, 1.2, 1.9):
            keys = sample_keys(parse_distribution("zipf", rho), keyspace, 100_000, rng)
            shares.append(float(np.mean(keys < head)))
        assert shares[0] < shares[1] < shares[2]

    def test_single_key(self, rng):
        key = sample_key(UNIFORM, keyspace_from_gb(1.0), rng)
        assert isinstance(key, int) and 0 <= key < 10_240

    def test_negative_count(self, rng):
        with pytest.raises(InvalidArgumentError):
            sample_keys(UNIFORM, keyspace_from_gb(1.0), -1, rng)


class TestTrace:

    def test_deterministic(self):
        spec = DistributionSpec(family=Family.ZIPF, param=0.9)
        a = generate_trace(spec, keyspace_from_gb(1.0), 10_000, seed=7)
        b = generate_trace(spec, keyspace_from_gb(1.0), 10_000, seed=7)
        assert np.array_equal(a.keys, b.keys)

    def test_different_seeds_differ(self):
        a = generate_trace(UNIFORM, keyspace_from_gb(1.0), 1000, seed=1)
        b = generate_trace(UNIFORM, keyspace_from_gb(1.0), 1000, seed=2)
        assert not np.array_equal(a.keys, b.keys)

    def test_uniform_coverage(self):
        keyspace = keyspace_from_gb(3.0)
        trace = generate_trace(UNIFORM, keyspace, 1_000_000, seed=1)
        assert len(trace) == 1_000_000
        assert np.unique(trace.keys).size >= 0.999 * keyspace.key_count

    def test_zero_length(self):
        with pytest.raises(InvalidArgumentError):
            generate_trace(UNIFORM, keyspace_from_gb(1.0), 0, seed=1)


class TestPhases:

    def test_four_phase_boundaries(self):
        phases = [(parse_distribution("exponential", 0.9), 250_000), (parse_distribution("zipf", 1.1), 250_000),
                  (parse_distribution("uniform"), 250_000), (parse_distribution("gaussian", 1.3), 250_000)]
        trace = concat_phases(phases, keyspace_from_gb(3.0), seed=3)
        assert len(trace) == 1_000_000
        assert trace.phase_boundaries == [250_000, 500_000, 750_000]
        assert trace.phase_of(0) == 0
        assert trace.phase_of(249_999) == 0
        assert trace.phase_of(250_000) == 1
        assert trace.phase_of(999_999) == 3
        assert [s.family for s in trace.phase_specs] == [Family.EXPONENTIAL, Family.ZIPF, Family.UNIFORM,
                                                         Family.GAUSSIAN]

    def test_single_phase_equals_generate_trace(self):
        spec = parse_distribution("gaussian", 1.0)
        keyspace = keyspace_from_gb(1.0)
        single = concat_phases([(spec, 5000)], keyspace, seed=11)
        plain = generate_trace(spec, keyspace, 5000, seed=11)
        assert np.array_equal(single.keys, plain.keys)

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            concat_phases([], keyspace_from_gb(1.0), seed=0)


class TestTraceFile:

    def test_write_read(self, tmp_path):
        trace = generate_trace(parse_distribution("zipf", 1.2), keyspace_from_gb(0.5), 2000, seed=5)
        loaded = read_trace(write_trace(trace, tmp_path / "t.cpt"))
        assert np.array_equal(loaded.keys, trace.keys)
        assert loaded.spec == trace.spec
        assert loaded.keyspace.key_count == trace.keyspace.key_count
        assert loaded.seed == 5

    def test_truncated(self, tmp_path):
        trace = generate_trace(UNIFORM, keyspace_from_gb(0.5), 100, seed=5)
        path = write_trace(trace, tmp_path / "t.cpt")
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FormatError):
            read_trace(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "t.cpt"
        path.write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(FormatError):
            read_trace(path)


def test_derive_seed_is_stable():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(2, 1)
    assert 0 <= derive_seed(0) < 2 ** 64


def test_make_rng_is_pcg64():
    assert isinstance(make_rng(1).bit_generator, np.random.PCG64)
