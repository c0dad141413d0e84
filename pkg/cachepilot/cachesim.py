"""
LRU 缓存模拟器

多节点集群按一个聚合容量的LRU池建模，命中/未命中计数加上两点响应时间模型，
作为训练数据和场景运行的"真实值"来源。
"""
import csv
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError
from .models import CacheConfig, DistributionSpec, KeySpace, LatencyModel, validated
from .workload import Trace, generate_trace

logger = logging.getLogger("cachepilot.cachesim")

RUN_STATS_COLUMNS = [
    "query_index", "window_hit_rate_pct", "cum_hit_rate_pct",
    "window_mean_latency_ms", "cache_gb", "phase_id",
]


class AccessResult(str, Enum):
    HIT = "hit"
    MISS = "miss"


class LRUCache:
    """哈希索引 + 双向链表（OrderedDict）实现的 LRU，队首为最久未使用"""

    def __init__(self, config: CacheConfig):
        self.config = config
        self._store: "OrderedDict[Hashable, None]" = OrderedDict()

    @property
    def slots(self) -> int:
        return self.config.slots

    @property
    def capacity_gb(self) -> float:
        return self.config.capacity_gb

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._store

    def lru_order(self) -> List[Hashable]:
        """从最久未使用到最近使用"""
        return list(self._store.keys())

    def touch(self, key: Hashable) -> bool:
        """访问一个键，命中返回 True"""
        store = self._store
        if key in store:
            store.move_to_end(key)
            return True
        store[key] = None
        if len(store) > self.config.slots:
            store.popitem(last=False)
        return False

    def access(self, key: Hashable) -> AccessResult:
        return AccessResult.HIT if self.touch(key) else AccessResult.MISS

    def resize(self, new_capacity_gb: float) -> int:
        """调整容量，缩容时从LRU端淘汰，返回淘汰数"""
        if not new_capacity_gb > 0:
            raise InvalidArgumentError(f"缓存容量必须大于0: {new_capacity_gb}")
        self.config = validated(CacheConfig, capacity_gb=new_capacity_gb, node_count=self.config.node_count)
        evicted = 0
        while len(self._store) > self.config.slots:
            self._store.popitem(last=False)
            evicted += 1
        if evicted:
            logger.debug(f"缩容至 {new_capacity_gb:.2f} GB，淘汰 {evicted} 个键")
        return evicted


def new_cache(config: CacheConfig) -> LRUCache:
    """创建空缓存"""
    if config.slots < 1:
        raise InvalidArgumentError(f"缓存槽位数为0: {config.capacity_gb} GB")
    return LRUCache(config)


@dataclass
class RunStats:
    """运行统计：累计计数、按窗口的序列以及逐查询的命中记录"""
    window: int
    latency: LatencyModel = field(default_factory=LatencyModel)
    hits: int = 0
    misses: int = 0
    # (query_index, window_hit_rate_pct, cum_hit_rate_pct, window_mean_latency_ms, cache_gb, phase_id)
    records: List[Tuple[int, float, float, float, float, int]] = field(default_factory=list)
    outcomes: bytearray = field(default_factory=bytearray)
    _win_hits: int = 0
    _win_count: int = 0

    @property
    def queries(self) -> int:
        return self.hits + self.misses

    @property
    def cumulative_hit_rate_pct(self) -> float:
        return 100.0 * self.hits / self.queries if self.queries else 0.0

    @property
    def window_hit_rates(self) -> List[float]:
        return [r[1] for r in self.records]

    def hit_rate_between(self, start: int, stop: int) -> float:
        """查询区间 [start, stop) 上的命中率（%）"""
        if not 0 <= start < stop <= len(self.outcomes):
            raise InvalidArgumentError(f"统计区间不合法: [{start}, {stop})，已处理 {len(self.outcomes)} 个查询")
        hits = np.frombuffer(bytes(self.outcomes[start:stop]), dtype=np.uint8)
        return 100.0 * float(hits.sum()) / (stop - start)

    def _flush(self, query_index: int, cache_gb: float, phase_id: int):
        rate = self._win_hits / self._win_count
        self.records.append((
            query_index,
            100.0 * rate,
            self.cumulative_hit_rate_pct,
            self.latency.mean_latency(rate),
            cache_gb,
            phase_id,
        ))
        self._win_hits = 0
        self._win_count = 0

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(RUN_STATS_COLUMNS)
            for idx, rate, cum, lat, gb, phase in self.records:
                writer.writerow([idx, f"{rate:.4f}", f"{cum:.4f}", f"{lat:.4f}", f"{gb:.4f}", phase])
        return path


def _as_keys(trace: Union[Trace, Sequence[Hashable], np.ndarray]) -> Tuple[list, Optional[Trace]]:
    if isinstance(trace, Trace):
        return trace.keys.tolist(), trace
    if isinstance(trace, np.ndarray):
        return trace.tolist(), None
    return list(trace), None


def run_trace(cache: LRUCache, trace: Union[Trace, Sequence[Hashable]], latency: LatencyModel,
              window: int, stats: Optional[RunStats] = None, start: int = 0,
              stop: Optional[int] = None) -> RunStats:
    """
    按顺序回放 [start, stop) 区间的查询

    窗口按绝对查询下标对齐，可分多段调用并传入同一个 stats（中途可 resize）。
    最后一个不满的窗口只在回放到序列末尾时输出。
    """
    if window < 1:
        raise InvalidArgumentError(f"窗口大小必须 >= 1: {window}")
    keys, tr = _as_keys(trace)
    total = len(keys)
    stop = total if stop is None else stop
    if not 0 <= start <= stop <= total:
        raise InvalidArgumentError(f"回放区间不合法: [{start}, {stop})，序列长度 {total}")
    if stats is None:
        stats = RunStats(window=window, latency=latency)
    if len(stats.outcomes) != start:
        raise InvalidArgumentError(f"统计对象已处理 {len(stats.outcomes)} 个查询，无法从 {start} 继续")

    touch = cache.touch
    outcomes = stats.outcomes
    for index in range(start, stop):
        hit = touch(keys[index])
        outcomes.append(1 if hit else 0)
        if hit:
            stats.hits += 1
            stats._win_hits += 1
        else:
            stats.misses += 1
        stats._win_count += 1
        if (index + 1) % window == 0:
            phase = tr.phase_of(index) if tr is not None else 0
            stats._flush(index + 1, cache.capacity_gb, phase)

    if stop == total and stats._win_count:
        phase = tr.phase_of(total - 1) if tr is not None else 0
        stats._flush(total, cache.capacity_gb, phase)
    return stats


def _replay_hits(cache: LRUCache, keys: Iterable[int], warm: int) -> int:
    """回放并只统计下标 >= warm 的命中数"""
    touch = cache.touch
    hits = 0
    for index, key in enumerate(keys):
        if touch(key) and index >= warm:
            hits += 1
    return hits


def _check_warmup(n_queries: int, warmup_fraction: float) -> int:
    if not 0.0 <= warmup_fraction < 1.0:
        raise InvalidArgumentError(f"预热比例必须在 [0, 1) 内: {warmup_fraction}")
    if n_queries < 1:
        raise InvalidArgumentError(f"查询数必须 >= 1: {n_queries}")
    warm = int(n_queries * warmup_fraction)
    if warm >= n_queries:
        raise InvalidArgumentError("预热后没有剩余查询")
    return warm


def steady_hit_rate(spec: DistributionSpec, keyspace: KeySpace, capacity_gb: float, n_queries: int,
                    warmup_fraction: float, seed: int) -> float:
    """冷启动运行一次模拟，返回预热之后的命中率（%）"""
    warm = _check_warmup(n_queries, warmup_fraction)
    cache = new_cache(validated(CacheConfig, capacity_gb=capacity_gb))
    trace = generate_trace(spec, keyspace, n_queries, seed)
    hits = _replay_hits(cache, trace.keys.tolist(), warm)
    return 100.0 * hits / (n_queries - warm)


def steady_hit_rate_curve(spec: DistributionSpec, keyspace: KeySpace, capacities_gb: Sequence[float],
                          n_queries: int, warmup_fraction: float, seed: int) -> List[float]:
    """同一条序列在多个容量下的稳态命中率，LRU 的包含性保证结果随容量单调不减"""
    warm = _check_warmup(n_queries, warmup_fraction)
    keys = generate_trace(spec, keyspace, n_queries, seed).keys.tolist()
    rates = []
    for capacity in capacities_gb:
        cache = new_cache(validated(CacheConfig, capacity_gb=capacity))
        rates.append(100.0 * _replay_hits(cache, keys, warm) / (n_queries - warm))
    return rates
