"""
基于双样本KS检验的访问分布估计

对每个候选 (分布族, 参数) 在租户自身的键空间上生成合成样本，与最近的查询样本做KS检验，
取 p 值最大的候选；最大 p 值低于阈值时回退为均匀分布。
"""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError
from .models import DistributionSpec, EstimationResult, Family, GridConfig, KeySpace
from .parallel import fan_out
from .workload import keyspace_from_gb, sample_keys

logger = logging.getLogger("cachepilot.estimator")

ACCURACY_COLUMNS = ["sample_count", "correct_family_pct", "exact_param_pct", "eps_le_0.1_pct", "eps_le_0.2_pct"]

FAMILY_ORDER = [Family.UNIFORM, Family.GAUSSIAN, Family.EXPONENTIAL, Family.ZIPF]

_SERIES_EPS = 1e-10
_SERIES_MAX_TERMS = 1000


def ks_statistic(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """两个经验分布函数（右连续）之间的最大距离"""
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidArgumentError("KS检验的样本不能为空")
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_pvalue(d: float, n: int, m: int) -> float:
    """渐近双样本 p 值 Q(λ)，λ = (√e + 0.12 + 0.11/√e)·D，e = nm/(n+m)"""
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"样本数必须 >= 1: n={n}, m={m}")
    if not (isinstance(d, (int, float)) and 0.0 <= d <= 1.0) or math.isnan(d):
        raise InvalidArgumentError(f"KS统计量必须在 [0, 1] 内: {d}")
    en = math.sqrt(n * m / (n + m))
    lam = (en + 0.12 + 0.11 / en) * d
    if lam < 1.1e-16:
        return 1.0

    x = -2.0 * lam * lam
    total = 0.0
    sign = 1.0
    for k in range(1, _SERIES_MAX_TERMS + 1):
        term = math.exp(x * k * k)
        total += sign * term
        if term < _SERIES_EPS:
            break
        sign = -sign
    else:
        # λ 极小时级数不收敛，此时 Q(λ) 趋近于1
        return 1.0
    return min(1.0, max(0.0, 2.0 * total))


def _tie_rank(spec: DistributionSpec) -> Tuple[int, float]:
    """p 值相同时优先选择需要更多缓存的候选"""
    family_rank = FAMILY_ORDER.index(spec.family)
    if spec.family == Family.GAUSSIAN:
        return family_rank, -spec.param
    if spec.family in (Family.EXPONENTIAL, Family.ZIPF):
        return family_rank, spec.param
    return family_rank, 0.0


def candidates(grid: GridConfig) -> List[DistributionSpec]:
    """网格上的全部候选分布"""
    specs = []
    for family in FAMILY_ORDER:
        for value in grid.values(family):
            specs.append(DistributionSpec(family=family, param=value))
    return specs


def estimate(samples: Sequence[int], keyspace: KeySpace, grid: GridConfig,
             rng: np.random.Generator) -> EstimationResult:
    """估计样本的分布族和参数"""
    samples = np.asarray(samples)
    n = int(samples.size)
    if n < grid.min_samples:
        raise InvalidArgumentError(f"样本数不足: {n} < {grid.min_samples}")

    observed = np.sort(samples.astype(np.float64))
    m = grid.synthetic_size(n)
    base = int(rng.integers(2 ** 63))

    scored: List[Tuple[float, DistributionSpec]] = []
    for family_index, family in enumerate(FAMILY_ORDER):
        # 同一分布族的各参数共用一组随机数，候选之间的比较只反映参数差异
        seed_seq = np.random.SeedSequence([base, family_index])
        for value in grid.values(family):
            spec = DistributionSpec(family=family, param=value)
            synthetic = sample_keys(spec, keyspace, m, np.random.Generator(np.random.PCG64(seed_seq)))
            d = ks_statistic(observed, synthetic)
            scored.append((ks_pvalue(d, n, m), spec))

    best_p, best_spec = min(scored, key=lambda item: (-item[0], _tie_rank(item[1])))
    fallback = best_p < grid.p_threshold
    if fallback:
        logger.debug(f"最大p值 {best_p:.4g} 低于阈值 {grid.p_threshold}，回退为均匀分布")
        best_spec = DistributionSpec(family=Family.UNIFORM)

    return EstimationResult(spec=best_spec, p_value=best_p, candidates_evaluated=len(scored), fallback=fallback)


def is_pattern_change(previous: Optional[EstimationResult], current: EstimationResult, tolerance: float) -> bool:
    """分布族改变，或参数变化超过 tolerance，视为访问模式发生变化"""
    if previous is None:
        return True
    if previous.spec.family != current.spec.family:
        return True
    return abs(previous.spec.param - current.spec.param) > tolerance + 1e-9


@dataclass
class AccuracyRow:
    sample_count: int
    correct_family_pct: float
    exact_param_pct: float
    eps_le_01_pct: float
    eps_le_02_pct: float


def _accuracy_trial(job: Tuple[int, int, int, float, dict]) -> Tuple[bool, bool, bool, bool]:
    """单次试验：随机选取真实分布，采样，估计并打分"""
    seed, count, trial, data_gb, grid_settings = job
    grid = GridConfig(**grid_settings)
    keyspace = keyspace_from_gb(data_gb)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, count, trial])))

    family = FAMILY_ORDER[int(rng.integers(len(FAMILY_ORDER)))]
    values = grid.values(family)
    truth = DistributionSpec(family=family, param=values[int(rng.integers(len(values)))])
    samples = sample_keys(truth, keyspace, count, rng)
    result = estimate(samples, keyspace, grid, rng)

    if result.spec.family != truth.family:
        return False, False, False, False
    err = abs(result.spec.param - truth.param)
    return True, err < 1e-9, err <= 0.1 + 1e-9, err <= 0.2 + 1e-9


def accuracy_study(sample_counts: Sequence[int], trials: int, seed: int, grid: Optional[GridConfig] = None,
                   data_gb: float = 3.0, workers: Optional[int] = None) -> List[AccuracyRow]:
    """多次随机试验统计估计准确率，每个样本数输出一行"""
    if trials < 1:
        raise InvalidArgumentError(f"试验次数必须 >= 1: {trials}")
    grid = grid or GridConfig()
    for count in sample_counts:
        if count < grid.min_samples:
            raise InvalidArgumentError(f"样本数 {count} 小于估计所需的最小值 {grid.min_samples}")

    settings = grid.model_dump()
    rows = []
    for count in sample_counts:
        jobs = [(int(seed), int(count), t, float(data_gb), settings) for t in range(trials)]
        outcomes = np.array(fan_out(_accuracy_trial, jobs, workers, label="估计试验"), dtype=np.float64)
        pct = 100.0 * outcomes.mean(axis=0)
        rows.append(AccuracyRow(int(count), *(float(v) for v in pct)))
        logger.info(f"样本数 {count}: 分布族正确率 {pct[0]:.1f}%")
    return rows


def write_accuracy_csv(rows: Sequence[AccuracyRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(ACCURACY_COLUMNS)
        for row in rows:
            writer.writerow([row.sample_count, f"{row.correct_family_pct:.1f}", f"{row.exact_param_pct:.1f}",
                             f"{row.eps_le_01_pct:.1f}", f"{row.eps_le_02_pct:.1f}"])
    return path
