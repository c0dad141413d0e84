"""
键空间定义与可复现的访问序列生成

四种分布到键下标的映射（非均匀分布的热度都集中在小下标上）：
  - Uniform:     key = floor(u * K)
  - Zipf:        P(r) ∝ r^-ρ, r ∈ {1..K}，累积表上二分查找，key = r - 1
  - Exponential: x = -ln(u) / λ，x >= X_EXP 时重采样，key = floor(x / X_EXP * K)
  - Gaussian:    x = |N(0, σ)|，x >= X_GAUSS 时重采样，key = floor(x / X_GAUSS * K)

随机数发生器统一使用 numpy 的 PCG64。
"""
import csv
import logging
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .models import KEYS_PER_GB, DistributionSpec, Family, KeySpace, validated

logger = logging.getLogger("cachepilot.workload")

X_EXP = 10.0
X_GAUSS = 4.0

TRACE_MAGIC = b"CPT1"
_TRACE_HEADER = struct.Struct("<4sIQQBd")

# YCSB 负载在估计中表现为 Zipf(ρ=1.0)
YCSB_LIKE = DistributionSpec(family=Family.ZIPF, param=1.0)


@dataclass
class Trace:
    """单个租户的访问序列"""
    tenant_id: str
    spec: DistributionSpec
    keyspace: KeySpace
    seed: int
    keys: np.ndarray
    # 每个阶段的起始下标与分布；单一分布时只有一个阶段
    phase_starts: List[int] = field(default_factory=lambda: [0])
    phase_specs: List[DistributionSpec] = field(default_factory=list)

    def __post_init__(self):
        if not self.phase_specs:
            self.phase_specs = [self.spec]

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    @property
    def phase_boundaries(self) -> List[int]:
        """阶段分界点（不含0）"""
        return self.phase_starts[1:]

    def phase_of(self, index: int) -> int:
        """查询下标所在的阶段编号"""
        return int(np.searchsorted(self.phase_starts, index, side="right")) - 1


def keyspace_from_gb(data_gb: float) -> KeySpace:
    """由数据量（GB）得到键空间"""
    if not data_gb > 0:
        raise InvalidArgumentError(f"数据量必须大于0: {data_gb}")
    return validated(KeySpace, data_gb=data_gb, key_count=int(round(data_gb * KEYS_PER_GB)))


def make_rng(seed: int) -> np.random.Generator:
    """按种子构造 PCG64 发生器"""
    return np.random.Generator(np.random.PCG64(int(seed)))


def parse_distribution(family: str, param: float = 0.0) -> DistributionSpec:
    """解析命令行/场景文件中的分布描述，支持 ycsb-like 别名"""
    name = (family or "").strip().lower()
    if name in ("ycsb-like", "ycsb_like", "ycsb"):
        return YCSB_LIKE
    try:
        fam = Family(name)
    except ValueError:
        raise InvalidArgumentError(f"未知的分布族: {family}")
    return validated(DistributionSpec, family=fam, param=param)


@lru_cache(maxsize=64)
def _zipf_cdf(key_count: int, rho: float) -> np.ndarray:
    """Zipf 累积分布表"""
    ranks = np.arange(1, key_count + 1, dtype=np.float64)
    weights = ranks ** (-rho)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def _truncated(draw, limit: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """拒绝采样：保留 < limit 的样本直到凑够 n 个"""
    out = np.empty(0, dtype=np.float64)
    batch = n
    while out.shape[0] < n:
        x = draw(rng, batch)
        out = np.concatenate([out, x[x < limit]])
        batch = max(16, n - out.shape[0]) * 2
    return out[:n]


def sample_keys(spec: DistributionSpec, keyspace: KeySpace, n: int, rng: np.random.Generator) -> np.ndarray:
    """按分布生成 n 个键下标（uint32）"""
    if n < 0:
        raise InvalidArgumentError(f"样本数不能为负: {n}")
    k = keyspace.key_count
    if n == 0:
        return np.empty(0, dtype=np.uint32)

    if spec.family == Family.UNIFORM:
        keys = np.floor(rng.random(n) * k)
    elif spec.family == Family.ZIPF:
        keys = np.searchsorted(_zipf_cdf(k, float(spec.param)), rng.random(n), side="right")
    elif spec.family == Family.EXPONENTIAL:
        lam = float(spec.param)
        x = _truncated(lambda g, m: -np.log1p(-g.random(m)) / lam, X_EXP, n, rng)
        keys = np.floor(x / X_EXP * k)
    else:
        sigma = float(spec.param)
        x = _truncated(lambda g, m: np.abs(g.standard_normal(m) * sigma), X_GAUSS, n, rng)
        keys = np.floor(x / X_GAUSS * k)

    return np.minimum(keys, k - 1).astype(np.uint32)


def sample_key(spec: DistributionSpec, keyspace: KeySpace, rng: np.random.Generator) -> int:
    """生成单个键下标"""
    return int(sample_keys(spec, keyspace, 1, rng)[0])


def generate_trace(spec: DistributionSpec, keyspace: KeySpace, length: int, seed: int,
                   tenant_id: str = "tenant-1") -> Trace:
    """生成长度为 length 的访问序列，对所有参数是确定性的"""
    if length < 1:
        raise InvalidArgumentError(f"序列长度必须 >= 1: {length}")
    keys = sample_keys(spec, keyspace, length, make_rng(seed))
    return Trace(tenant_id=tenant_id, spec=spec, keyspace=keyspace, seed=int(seed), keys=keys)


def concat_phases(phases: Sequence[Tuple[DistributionSpec, int]], keyspace: KeySpace, seed: int,
                  tenant_id: str = "tenant-1") -> Trace:
    """按顺序拼接多个阶段，阶段共享同一个键空间与同一个发生器"""
    if not phases:
        raise InvalidArgumentError("阶段列表不能为空")
    rng = make_rng(seed)
    chunks, starts, specs = [], [], []
    offset = 0
    for spec, length in phases:
        if length < 1:
            raise InvalidArgumentError(f"阶段长度必须 >= 1: {length}")
        starts.append(offset)
        specs.append(spec)
        chunks.append(sample_keys(spec, keyspace, int(length), rng))
        offset += int(length)
    return Trace(tenant_id=tenant_id, spec=specs[0], keyspace=keyspace, seed=int(seed),
                 keys=np.concatenate(chunks), phase_starts=starts, phase_specs=specs)


def write_trace(trace: Trace, path: Union[str, Path]) -> Path:
    """写入二进制序列文件（小端）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _TRACE_HEADER.pack(TRACE_MAGIC, trace.keyspace.key_count, len(trace), trace.seed,
                                trace.spec.family.code, float(trace.spec.param))
    with open(path, "wb") as f:
        f.write(header)
        f.write(trace.keys.astype("<u4").tobytes())
    logger.info(f"序列已写入: {path} ({len(trace)} 个键)")
    return path


def read_trace(path: Union[str, Path], tenant_id: str = "tenant-1", data_gb: Optional[float] = None) -> Trace:
    """读取二进制序列文件"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FormatError(f"无法读取序列文件 {path}: {e}")
    if len(raw) < _TRACE_HEADER.size:
        raise FormatError(f"序列文件被截断: {path}")
    magic, key_count, length, seed, code, param = _TRACE_HEADER.unpack_from(raw)
    if magic != TRACE_MAGIC:
        raise FormatError(f"序列文件魔数不符: {path}")
    body = raw[_TRACE_HEADER.size:]
    if len(body) != 4 * length:
        raise FormatError(f"序列文件长度不符: 期望 {length} 个键, 实际 {len(body) // 4}")
    keys = np.frombuffer(body, dtype="<u4").astype(np.uint32)
    if length and int(keys.max()) >= key_count:
        raise FormatError(f"序列文件包含越界键: {path}")
    spec = validated(DistributionSpec, family=Family.from_code(code), param=param)
    keyspace = validated(KeySpace, data_gb=data_gb or key_count / KEYS_PER_GB, key_count=key_count)
    return Trace(tenant_id=tenant_id, spec=spec, keyspace=keyspace, seed=int(seed), keys=keys)


def export_csv(trace: Trace, path: Union[str, Path]) -> Path:
    """导出CSV（每行一个键下标），用于调试"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        for key in trace.keys.tolist():
            writer.writerow([key])
    return path


def derive_seed(*parts: int) -> int:
    """由多个整数派生一个64位种子"""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)[0])
