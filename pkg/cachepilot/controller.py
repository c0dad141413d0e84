"""
缓存调整规则与共享缓存池预算

对租户 k，H 为预测命中率，H_req 为命中率要求：
  (i)   H(当前) < H_req - δ1：调整到整个网格上满足 H(c) >= H_req + δ1 的最小容量
  (ii)  H(当前) > H_req + δ2：若整个网格上满足 H(c) >= H_req + δ2 的最小容量更小，缩容到该容量
  (iii) 否则保持不变
共享池中所有租户的分配之和不超过池容量，扩容无法满足时上报管理员。
"""
import logging
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .cachesim import steady_hit_rate
from .errors import InvalidArgumentError, QoSUnsatisfiableError, StateError
from .estimator import estimate, is_pattern_change
from .models import (AdminAlert, DecisionKind, DistributionSpec, EstimationResult, Family, GridConfig,
                     ResizeDecision, TenantState)
from .predictor import HitRateModel
from .workload import keyspace_from_gb

logger = logging.getLogger("cachepilot.controller")

_TOL = 1e-9


def cache_grid(grid_step_gb: float, max_gb: float) -> List[float]:
    """{step, 2·step, …, max_gb}"""
    if not grid_step_gb > 0:
        raise InvalidArgumentError(f"容量网格步长必须大于0: {grid_step_gb}")
    count = int(np.floor(max_gb / grid_step_gb + _TOL))
    if count < 1:
        raise InvalidArgumentError(f"最大容量 {max_gb} GB 小于网格步长 {grid_step_gb} GB")
    return [round(k * grid_step_gb, 6) for k in range(1, count + 1)]


def decide(model: HitRateModel, d: DistributionSpec, tenant: TenantState, grid_step_gb: float = 0.1,
           max_gb: float = 4.0) -> ResizeDecision:
    """根据预测曲线决定扩容、缩容或保持"""
    if model.family != d.family:
        raise InvalidArgumentError(f"模型分布族 {model.family.value} 与估计分布 {d.family.value} 不一致")
    grid = cache_grid(grid_step_gb, max_gb)
    current = tenant.current_alloc_gb
    curve = model.curve(tenant.data_gb, d.param, grid)
    h_current = model.curve(tenant.data_gb, d.param, [current])[0] if current > 0 else 0.0

    h_req = tenant.required_hit_pct
    low = h_req - tenant.delta1_pct
    high = h_req + tenant.delta2_pct

    def hold(reason: str) -> ResizeDecision:
        return ResizeDecision(kind=DecisionKind.HOLD, current_gb=current, target_alloc_gb=current,
                              predicted_hit_pct=float(h_current), reason=reason)

    def resize(c: float, h: float, reason: str) -> ResizeDecision:
        kind = DecisionKind.GROW if c > current + _TOL else DecisionKind.SHRINK
        return ResizeDecision(kind=kind, current_gb=current, target_alloc_gb=c, predicted_hit_pct=h,
                              reason=reason)

    if h_current < low:
        need = h_req + tenant.delta1_pct
        found = smallest_meeting(grid, curve, need)
        if found is None:
            return ResizeDecision(kind=DecisionKind.ADMIN_ALERT, current_gb=current, target_alloc_gb=current,
                                  predicted_hit_pct=float(h_current),
                                  reason=f"最大容量 {max_gb} GB 下预测命中率也达不到 {need:.1f}%")
        return resize(*found, reason=f"预测命中率 {h_current:.1f}% < {low:.1f}%")

    if h_current > high:
        found = smallest_meeting(grid, curve, high)
        if found is None or found[0] >= current - _TOL:
            return hold("没有更小的容量能保持安全余量")
        return resize(*found, reason=f"预测命中率 {h_current:.1f}% > {high:.1f}%")

    return hold("预测命中率在目标区间内")


def smallest_meeting(grid: List[float], curve: np.ndarray, threshold: float) -> Optional[Tuple[float, float]]:
    """整个网格上预测值达到阈值的最小容量；预测曲线不要求单调"""
    hits = np.flatnonzero(np.asarray(curve) >= threshold)
    if hits.size == 0:
        return None
    i = int(hits[0])
    return grid[i], float(curve[i])


class PoolState(BaseModel):
    """共享缓存池"""
    model_config = ConfigDict(frozen=True)

    total_gb: float = Field(gt=0)
    allocations: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_budget(self) -> "PoolState":
        for tenant_id, gb in self.allocations.items():
            if gb < 0:
                raise ValueError(f"租户 {tenant_id} 的分配不能为负: {gb}")
        if sum(self.allocations.values()) > self.total_gb + _TOL:
            raise ValueError(f"分配总量超过缓存池容量 {self.total_gb} GB")
        return self

    @property
    def used_gb(self) -> float:
        return float(sum(self.allocations.values()))

    @property
    def free_gb(self) -> float:
        return max(0.0, self.total_gb - self.used_gb)

    def add_tenant(self, tenant_id: str, alloc_gb: float = 0.0) -> "PoolState":
        if tenant_id in self.allocations:
            raise InvalidArgumentError(f"租户已存在: {tenant_id}")
        if alloc_gb < 0:
            raise InvalidArgumentError(f"初始分配不能为负: {alloc_gb}")
        if alloc_gb > self.free_gb + _TOL:
            raise QoSUnsatisfiableError(f"缓存池剩余 {self.free_gb:.2f} GB，无法为 {tenant_id} 分配 {alloc_gb:.2f} GB")
        return self.with_allocation(tenant_id, alloc_gb)

    def with_allocation(self, tenant_id: str, alloc_gb: float) -> "PoolState":
        return PoolState(total_gb=self.total_gb, allocations={**self.allocations, tenant_id: round(alloc_gb, 9)})


def apply(pool: PoolState, tenant_id: str, decision: ResizeDecision) -> Union[PoolState, AdminAlert]:
    """把决策提交到共享池，扩容空间不足时返回 AdminAlert"""
    if tenant_id not in pool.allocations:
        raise InvalidArgumentError(f"未知租户: {tenant_id}")
    current = pool.allocations[tenant_id]

    if decision.kind == DecisionKind.ADMIN_ALERT:
        return AdminAlert(tenant_id=tenant_id, requested_gb=decision.target_alloc_gb,
                          shortfall_gb=decision.shortfall_gb, reason=decision.reason)
    if decision.kind == DecisionKind.HOLD:
        return pool
    if decision.kind == DecisionKind.GROW:
        increase = decision.target_alloc_gb - current
        if increase > pool.free_gb + _TOL:
            shortfall = increase - pool.free_gb
            logger.warning(f"租户 {tenant_id} 扩容到 {decision.target_alloc_gb:.2f} GB 缺少 {shortfall:.2f} GB")
            return AdminAlert(tenant_id=tenant_id, requested_gb=decision.target_alloc_gb,
                              shortfall_gb=shortfall, reason="共享缓存池空间不足")
    return pool.with_allocation(tenant_id, decision.target_alloc_gb)


def control_step(tenant: TenantState, recent_samples, pool: PoolState, models: Dict[Family, HitRateModel],
                 grid: GridConfig, grid_step_gb: float = 0.1, max_gb: float = 4.0,
                 only_on_pattern_change: bool = False
                 ) -> Tuple[Optional[EstimationResult], ResizeDecision, PoolState]:
    """
    一次完整的控制：估计 → 选择分布族模型 → 决策 → 提交到共享池

    会更新 tenant 的当前分配、最近估计和估计轮次。共享池无法满足扩容时，
    返回的决策类型为 ADMIN_ALERT 且带有缺口大小，池状态不变。
    """
    current = tenant.current_alloc_gb
    samples = np.asarray(recent_samples if recent_samples is not None else [])
    if samples.size == 0:
        return tenant.last_estimate, ResizeDecision(kind=DecisionKind.HOLD, current_gb=current,
                                                    target_alloc_gb=current, reason="没有新的查询样本"), pool

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([tenant.seed, tenant.epoch])))
    keyspace = keyspace_from_gb(tenant.data_gb)
    result = estimate(samples, keyspace, grid, rng)
    tenant.epoch += 1

    if only_on_pattern_change and not is_pattern_change(tenant.last_estimate, result, grid.pattern_change_tolerance):
        return result, ResizeDecision(kind=DecisionKind.HOLD, current_gb=current, target_alloc_gb=current,
                                      reason="访问模式未变化"), pool
    tenant.last_estimate = result

    model = models.get(result.spec.family)
    if model is None:
        raise StateError(f"缺少分布族 {result.spec.family.value} 的命中率模型")
    decision = decide(model, result.spec, tenant, grid_step_gb, max_gb)
    outcome = apply(pool, tenant.tenant_id, decision)

    if isinstance(outcome, AdminAlert):
        decision = ResizeDecision(kind=DecisionKind.ADMIN_ALERT, current_gb=current,
                                  target_alloc_gb=decision.target_alloc_gb,
                                  predicted_hit_pct=decision.predicted_hit_pct,
                                  shortfall_gb=outcome.shortfall_gb, reason=outcome.reason or decision.reason)
        logger.warning(f"[{tenant.tenant_id}] 上报管理员: {decision.reason}")
    else:
        pool = outcome
        tenant.current_alloc_gb = pool.allocations[tenant.tenant_id]
        if decision.is_resize:
            logger.info(f"[{tenant.tenant_id}] 估计 {result.spec.label} (p={result.p_value:.3f})，"
                        f"{decision.kind.value}: {current:.2f} → {decision.target_alloc_gb:.2f} GB")
    return result, decision, pool


def alert_for(tenant_id: str, decision: ResizeDecision) -> AdminAlert:
    """由 ADMIN_ALERT 决策构造上报事件"""
    return AdminAlert(tenant_id=tenant_id, requested_gb=decision.target_alloc_gb,
                      shortfall_gb=decision.shortfall_gb, reason=decision.reason)


class OracleResult(BaseModel):
    """按测量数据找到的最优容量"""
    model_config = ConfigDict(frozen=True)

    cache_gb: float
    hit_pct: float
    satisfied: bool


def optimal_alloc_oracle(spec: DistributionSpec, data_gb: float, h_req: float, grid_step: float = 0.1,
                         seed: int = 0, max_gb: float = 4.0, n_queries: int = 500000,
                         warmup_fraction: float = 0.5) -> OracleResult:
    """从小到大遍历容量网格，返回稳态命中率达到 h_req 的最小容量；都达不到时返回最大网格点"""
    keyspace = keyspace_from_gb(data_gb)
    rate = 0.0
    c = grid_step
    for c in cache_grid(grid_step, max_gb):
        rate = steady_hit_rate(spec, keyspace, c, n_queries, warmup_fraction, seed)
        if rate >= h_req:
            return OracleResult(cache_gb=c, hit_pct=rate, satisfied=True)
    logger.warning(f"{spec.label} 在 {max_gb} GB 内达不到 {h_req}% 命中率")
    return OracleResult(cache_gb=c, hit_pct=rate, satisfied=False)
