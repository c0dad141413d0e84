# -*- coding: utf-8 -*-
"""
场景配置管理模块

每个场景是一个JSON文档，深度合并到内置默认值之上，再由命令行参数覆盖。
"""
import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from .config import config
from .errors import FormatError
from .models import DistributionSpec, validated
from .workload import parse_distribution

logger = logging.getLogger("cachepilot.scenario_config")

ScenarioKind = Literal["single_resize", "multi_phase", "two_tenant_ratio", "accuracy_study", "train_eval"]


class PhaseSpec(BaseModel):
    """多阶段负载中的一个阶段"""
    family: str
    param: float = 0.0
    queries: int = Field(default=250000, ge=1)

    def spec(self) -> DistributionSpec:
        return parse_distribution(self.family, self.param)


class TenantSpec(BaseModel):
    tenant_id: str
    data_gb: float = Field(default=3.0, gt=0)
    family: str = "uniform"
    param: float = 0.0
    required_hit_pct: float = Field(default=80.0, gt=0, le=100)
    delta1_pct: float = Field(default=5.0, ge=0)
    delta2_pct: float = Field(default=5.0, ge=0)
    initial_alloc_gb: float = Field(default=0.3, ge=0)
    phases: List[PhaseSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_distribution(self) -> "TenantSpec":
        # 提前解析分布，非法分布在加载阶段就报错
        self.spec()
        for phase in self.phases:
            phase.spec()
        return self

    def spec(self) -> DistributionSpec:
        return parse_distribution(self.family, self.param)


class ScenarioConfig(BaseModel):
    """场景配置"""
    name: str = "scenario"
    kind: ScenarioKind
    seed: int = 0
    out_dir: str = "reports"
    models_dir: str = "models"
    model_kind: Literal["fcn", "gpr", "logfit"] = "fcn"
    tenants: List[TenantSpec] = Field(default_factory=list)
    queries: int = Field(default=1_000_000, ge=1)
    control_interval: int = Field(default=10000, ge=1)
    sample_window: int = Field(default=10000, ge=1)
    report_window: int = Field(default=10000, ge=1)
    warmup_exclusion: int = Field(default=50000, ge=0)
    pool_total_gb: float = Field(default=18.0, gt=0)
    node_count: int = Field(default=3, ge=1)
    grid_step_gb: float = Field(default=0.1, gt=0)
    max_gb: float = Field(default=4.0, gt=0)
    run_oracle: bool = True
    oracle_queries: int = Field(default=500000, ge=1)
    # two_tenant_ratio
    pool_sizes_gb: List[float] = Field(default_factory=lambda: [3.0, 6.0])
    ratios: List[int] = Field(default_factory=lambda: list(range(1, 10)))
    # accuracy_study
    sample_counts: List[int] = Field(default_factory=lambda: [100, 200, 300, 500, 1000, 2000])
    trials: int = Field(default=100, ge=1)
    data_gb: float = Field(default=3.0, gt=0)
    # train_eval
    families: List[Literal["uniform", "gaussian", "exponential", "zipf"]] = Field(
        default_factory=lambda: ["uniform", "gaussian", "exponential", "zipf"])
    model_kinds: List[Literal["fcn", "gpr", "logfit"]] = Field(default_factory=lambda: ["fcn", "gpr", "logfit"])
    queries_per_point: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_kind(self) -> "ScenarioConfig":
        if self.kind in ("single_resize", "multi_phase") and not self.tenants:
            raise ValueError(f"{self.kind} 场景至少需要一个租户")
        if self.kind == "multi_phase":
            for tenant in self.tenants:
                if not tenant.phases:
                    raise ValueError(f"multi_phase 场景的租户 {tenant.tenant_id} 缺少 phases")
        if self.kind == "two_tenant_ratio":
            if len(self.tenants) != 2:
                raise ValueError("two_tenant_ratio 场景需要恰好两个租户")
            if any(not 1 <= r <= 9 for r in self.ratios):
                raise ValueError(f"分配比例必须在 1..9 内: {self.ratios}")
            if any(size <= 0 for size in self.pool_sizes_gb):
                raise ValueError(f"缓存池容量必须大于0: {self.pool_sizes_gb}")
        ids = [t.tenant_id for t in self.tenants]
        if len(ids) != len(set(ids)):
            raise ValueError(f"租户ID重复: {ids}")
        return self


def _deep_merge(default: Dict[str, Any], user: Dict[str, Any]):
    """深度合并配置字典"""
    for key, value in user.items():
        if key in default and isinstance(default[key], dict) and isinstance(value, dict):
            _deep_merge(default[key], value)
        else:
            default[key] = value


def scenario_defaults() -> Dict[str, Any]:
    """由全局配置得到的场景默认值"""
    controller = config.get_controller_settings()
    return {
        "report_window": config.get("simulation.window", 10000),
        "sample_window": config.get("simulation.window", 10000),
        "warmup_exclusion": config.get("simulation.warmup_exclusion", 50000),
        "oracle_queries": config.get("simulation.queries_per_point", 500000),
        "pool_total_gb": controller.get("pool_total_gb", 18.0),
        "grid_step_gb": controller.get("grid_step_gb", 0.1),
        "max_gb": controller.get("max_gb", 4.0),
    }


def _tenant_defaults() -> Dict[str, Any]:
    controller = config.get_controller_settings()
    return {
        "delta1_pct": controller.get("delta1", 5.0),
        "delta2_pct": controller.get("delta2", 5.0),
    }


def build_scenario(document: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """默认值 ← 场景文档 ← 命令行覆盖"""
    merged = copy.deepcopy(scenario_defaults())
    _deep_merge(merged, copy.deepcopy(document))
    tenants = []
    for tenant in merged.get("tenants", []) or []:
        if not isinstance(tenant, dict):
            raise FormatError(f"租户配置必须是对象: {tenant}")
        item = _tenant_defaults()
        _deep_merge(item, tenant)
        tenants.append(item)
    merged["tenants"] = tenants
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return validated(ScenarioConfig, **merged)


def load_scenario(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """加载场景文件"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise FormatError(f"无法读取场景文件 {path}: {e}")
    except json.JSONDecodeError as e:
        raise FormatError(f"场景文件 {path} 不是合法的JSON: {e}")
    if not isinstance(document, dict):
        raise FormatError(f"场景文件 {path} 顶层必须是对象")
    scenario = build_scenario(document, overrides)
    logger.info(f"已加载场景 {scenario.name} ({scenario.kind}): {path}")
    return scenario


def save_scenario(scenario: ScenarioConfig, path: Union[str, Path]) -> Path:
    """保存场景配置（运行目录中记录实际使用的配置）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scenario.model_dump(mode="json"), f, ensure_ascii=False, indent=2, sort_keys=True)
    return path
