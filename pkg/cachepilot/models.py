"""
领域数据模型（pydantic）
"""
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InvalidArgumentError

# 每GB数据对应的键数量：4字节键 + 100KB值
KEYS_PER_GB = 10_240

M = TypeVar("M", bound=BaseModel)


def validated(model_cls: Type[M], **kwargs: Any) -> M:
    """构造模型，校验失败统一转换为 InvalidArgumentError"""
    try:
        return model_cls(**kwargs)
    except ValidationError as e:
        raise InvalidArgumentError(f"{model_cls.__name__} 参数不合法: {e.errors(include_url=False)}") from e


class Family(str, Enum):
    """访问分布族"""
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    ZIPF = "zipf"

    @property
    def code(self) -> int:
        return FAMILY_CODES[self]

    @property
    def label(self) -> str:
        return self.value.capitalize()

    @classmethod
    def from_code(cls, code: int) -> "Family":
        for family, value in FAMILY_CODES.items():
            if value == code:
                return family
        raise InvalidArgumentError(f"未知的分布族编码: {code}")


FAMILY_CODES = {
    Family.UNIFORM: 0,
    Family.GAUSSIAN: 1,
    Family.EXPONENTIAL: 2,
    Family.ZIPF: 3,
}


class DistributionSpec(BaseModel):
    """分布族 + 偏斜参数（高斯为σ，指数为λ，Zipf为ρ，均匀分布固定为0）"""
    model_config = ConfigDict(frozen=True)

    family: Family
    param: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if isinstance(data, dict):
            family = data.get("family")
            if family in (Family.UNIFORM, "uniform"):
                data = {**data, "param": 0.0}
        return data

    @model_validator(mode="after")
    def _check_param(self) -> "DistributionSpec":
        if self.family != Family.UNIFORM and self.param <= 0:
            raise ValueError(f"{self.family.value} 分布参数必须大于0")
        return self

    @property
    def label(self) -> str:
        if self.family == Family.UNIFORM:
            return "Uniform"
        return f"{self.family.label}({self.param:.1f})"


class KeySpace(BaseModel):
    """租户键空间"""
    model_config = ConfigDict(frozen=True)

    data_gb: float = Field(gt=0)
    key_count: int = Field(ge=1)


class CacheConfig(BaseModel):
    """缓存配置：多节点按一个聚合容量的LRU池建模，node_count 仅用于报表"""
    model_config = ConfigDict(frozen=True)

    capacity_gb: float = Field(gt=0)
    node_count: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_slots(self) -> "CacheConfig":
        if self.slots < 1:
            raise ValueError(f"缓存容量 {self.capacity_gb} GB 不足一个槽位")
        return self

    @property
    def slots(self) -> int:
        return int(round(self.capacity_gb * KEYS_PER_GB))

    @property
    def per_node_gb(self) -> float:
        return self.capacity_gb / self.node_count


class LatencyModel(BaseModel):
    """两点响应时间模型"""
    model_config = ConfigDict(frozen=True)

    hit_ms: float = Field(default=1.49, gt=0)
    miss_ms: float = Field(default=4.93, gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "LatencyModel":
        if not self.hit_ms < self.miss_ms:
            raise ValueError("命中延迟必须小于未命中延迟")
        return self

    def mean_latency(self, hit_fraction: float) -> float:
        return hit_fraction * self.hit_ms + (1.0 - hit_fraction) * self.miss_ms


class GridConfig(BaseModel):
    """KS估计的参数网格"""
    gaussian_min: float = 0.5
    gaussian_max: float = 2.0
    exponential_min: float = 0.5
    exponential_max: float = 2.0
    zipf_min: float = 0.5
    zipf_max: float = 3.0
    step: float = Field(default=0.1, gt=0)
    p_threshold: float = Field(default=0.01, ge=0, le=1)
    min_samples: int = Field(default=30, ge=1)
    min_synthetic: int = Field(default=1000, ge=1)
    pattern_change_tolerance: float = Field(default=0.15, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "GridConfig":
        for name in ("gaussian", "exponential", "zipf"):
            lo, hi = getattr(self, f"{name}_min"), getattr(self, f"{name}_max")
            if not 0 < lo <= hi:
                raise ValueError(f"{name} 参数范围不合法: [{lo}, {hi}]")
        return self

    def values(self, family: Family) -> List[float]:
        """某个分布族的候选参数（均匀分布只有0）"""
        if family == Family.UNIFORM:
            return [0.0]
        lo = getattr(self, f"{family.value}_min")
        hi = getattr(self, f"{family.value}_max")
        count = int(round((hi - lo) / self.step)) + 1
        return [round(lo + i * self.step, 6) for i in range(count)]

    def synthetic_size(self, n_samples: int) -> int:
        return max(n_samples, self.min_synthetic)

    @classmethod
    def from_settings(cls, settings: Dict[str, Any]) -> "GridConfig":
        """由配置文件的 estimator 节构造"""
        kwargs: Dict[str, Any] = {}
        for name in ("gaussian", "exponential", "zipf"):
            rng = settings.get(name) or {}
            if "min" in rng:
                kwargs[f"{name}_min"] = rng["min"]
            if "max" in rng:
                kwargs[f"{name}_max"] = rng["max"]
        for key in ("step", "p_threshold", "min_samples", "min_synthetic", "pattern_change_tolerance"):
            if key in settings:
                kwargs[key] = settings[key]
        return validated(cls, **kwargs)


class EstimationResult(BaseModel):
    """分布估计结果"""
    model_config = ConfigDict(frozen=True)

    spec: DistributionSpec
    p_value: float = Field(ge=0.0, le=1.0)
    candidates_evaluated: int = Field(ge=0)
    fallback: bool = False


class FcnConfig(BaseModel):
    """FCN 回归配置"""
    model_config = ConfigDict(frozen=True)

    hidden_neurons: Literal[16, 32, 64, 128, 256] = 64
    loss: Literal["mae", "mse"] = "mse"
    activation: Literal["sigmoid", "relu"] = "sigmoid"
    epochs: Literal[500, 1000, 2000, 4000] = 2000
    regularizer: Literal["l1", "l2"] = "l2"
    l2_coefficient: float = Field(default=1e-4, ge=0)
    learning_rate: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=15, ge=1)
    seed: int = 0


class DecisionKind(str, Enum):
    GROW = "grow"
    SHRINK = "shrink"
    HOLD = "hold"
    ADMIN_ALERT = "admin_alert"


class ResizeDecision(BaseModel):
    """缓存调整决策"""
    model_config = ConfigDict(frozen=True)

    kind: DecisionKind
    current_gb: float = Field(ge=0)
    target_alloc_gb: float = Field(ge=0)
    predicted_hit_pct: float = 0.0
    shortfall_gb: float = 0.0
    reason: str = ""

    @model_validator(mode="after")
    def _check_direction(self) -> "ResizeDecision":
        if self.kind == DecisionKind.GROW and not self.target_alloc_gb > self.current_gb:
            raise ValueError("Grow 决策的目标容量必须大于当前容量")
        if self.kind == DecisionKind.SHRINK and not self.target_alloc_gb < self.current_gb:
            raise ValueError("Shrink 决策的目标容量必须小于当前容量")
        if self.kind == DecisionKind.HOLD and self.target_alloc_gb != self.current_gb:
            raise ValueError("Hold 决策不能改变容量")
        return self

    @property
    def is_resize(self) -> bool:
        return self.kind in (DecisionKind.GROW, DecisionKind.SHRINK)


class AdminAlert(BaseModel):
    """共享池无法满足扩容时上报管理员的事件"""
    model_config = ConfigDict(frozen=True)

    tenant_id: str
    requested_gb: float
    shortfall_gb: float
    reason: str = ""


class TenantState(BaseModel):
    """租户运行状态"""
    model_config = ConfigDict(validate_assignment=True)

    tenant_id: str
    data_gb: float = Field(gt=0)
    required_hit_pct: float = Field(gt=0, le=100)
    current_alloc_gb: float = Field(default=0.0, ge=0)
    delta1_pct: float = Field(default=5.0, ge=0)
    delta2_pct: float = Field(default=5.0, ge=0)
    last_estimate: Optional[EstimationResult] = None
    window_hit_rates: List[float] = Field(default_factory=list)
    seed: int = 0
    epoch: int = 0
