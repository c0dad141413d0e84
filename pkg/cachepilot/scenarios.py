"""
场景实现

  - single_resize:    运行 N 个查询，在 N/2 处估计一次并调整容量，输出调整前后对比
  - multi_phase:      多个阶段依次切换访问分布，每隔固定查询数估计一次，模式变化时调整
  - two_tenant_ratio: 两个租户按 1:9 … 9:1 分配固定容量的缓存池，对比预测与测量命中率
  - accuracy_study:   KS估计准确率统计
  - train_eval:       生成训练/测试数据，训练并评估三种回归模型
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cachesim import RunStats, new_cache, run_trace, steady_hit_rate_curve
from .config import config
from .controller import PoolState, alert_for, control_step, optimal_alloc_oracle
from .errors import InvalidArgumentError
from .estimator import accuracy_study as run_accuracy_study
from .estimator import write_accuracy_csv
from .model_store import load_models, model_path, save_model
from .models import (CacheConfig, DecisionKind, EstimationResult, Family, GridConfig, LatencyModel,
                     ResizeDecision, TenantState, validated)
from .predictor import (TRAINING_GRID, FeatureVector, HitRateModel, ModelKind, build_test_set,
                        build_training_set, evaluate, train_model, write_evaluation_csv)
from .reports import (DECISION_COLUMNS, DECISION_FILE, ORACLE_COLUMNS, ORACLE_FILE, PHASE_COLUMNS, PHASE_FILE,
                      RATIO_COLUMNS, RATIO_FILE, SUMMARY_COLUMNS, SUMMARY_FILE, TIMESERIES_PREFIX, fmt, write_csv)
from .scenario_config import ScenarioConfig, TenantSpec, save_scenario
from .scenario_manager import ScenarioOutput, register_scenario
from .workload import concat_phases, derive_seed, generate_trace, keyspace_from_gb

logger = logging.getLogger("cachepilot.scenarios")


def _latency() -> LatencyModel:
    return validated(LatencyModel, **config.get_latency())


def _grid() -> GridConfig:
    return GridConfig.from_settings(config.get("estimator", {}))


def _tenant_state(spec: TenantSpec, seed: int) -> TenantState:
    return TenantState(tenant_id=spec.tenant_id, data_gb=spec.data_gb, required_hit_pct=spec.required_hit_pct,
                       current_alloc_gb=spec.initial_alloc_gb, delta1_pct=spec.delta1_pct,
                       delta2_pct=spec.delta2_pct, seed=seed)


def _initial_pool(cfg: ScenarioConfig) -> PoolState:
    pool = PoolState(total_gb=cfg.pool_total_gb)
    for tenant in sorted(cfg.tenants, key=lambda t: t.tenant_id):
        if not tenant.initial_alloc_gb > 0:
            raise InvalidArgumentError(f"租户 {tenant.tenant_id} 的初始缓存容量必须大于0")
        pool = pool.add_tenant(tenant.tenant_id, tenant.initial_alloc_gb)
    return pool


def _decision_row(query_index: int, tenant_id: str, estimate: Optional[EstimationResult],
                  decision: ResizeDecision, new_gb: float) -> List[str]:
    family = estimate.spec.family.value if estimate else ""
    param = fmt(estimate.spec.param, 1) if estimate else ""
    p_value = fmt(estimate.p_value, 6) if estimate else ""
    return [str(query_index), tenant_id, family, param, p_value, fmt(decision.current_gb, 2), fmt(new_gb, 2),
            fmt(decision.predicted_hit_pct, 2), decision.kind.value]


def _prepare(cfg: ScenarioConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_scenario(cfg, out_dir / "scenario.json")
    return out_dir


@register_scenario(name="single_resize")
def single_resize(cfg: ScenarioConfig, out_dir: Path, workers: Optional[int] = None) -> ScenarioOutput:
    """运行 N 个查询，在 N/2 处用最近的样本估计分布并调整一次容量"""
    out_dir = _prepare(cfg, out_dir)
    models = load_models(cfg.models_dir, ModelKind(cfg.model_kind))
    latency, grid = _latency(), _grid()
    pool = _initial_pool(cfg)
    n = cfg.queries
    mid = n // 2
    if mid < 1:
        raise InvalidArgumentError(f"查询数太少，无法在中点调整: {n}")

    summary_rows, decision_rows, oracle_rows, alerts, files = [], [], [], [], []
    for index, spec in sorted(enumerate(cfg.tenants), key=lambda item: item[1].tenant_id):
        seed = derive_seed(cfg.seed, index)
        distribution = spec.spec()
        trace = generate_trace(distribution, keyspace_from_gb(spec.data_gb), n, seed, spec.tenant_id)
        tenant = _tenant_state(spec, seed)
        cache = new_cache(validated(CacheConfig, capacity_gb=spec.initial_alloc_gb, node_count=cfg.node_count))

        stats = run_trace(cache, trace, latency, cfg.report_window, stop=mid)
        before_start = cfg.warmup_exclusion if cfg.warmup_exclusion < mid else 0
        before = stats.hit_rate_between(before_start, mid)

        samples = trace.keys[max(0, mid - cfg.sample_window):mid]
        estimate, decision, pool = control_step(tenant, samples, pool, models, grid, cfg.grid_step_gb, cfg.max_gb)
        if decision.is_resize:
            cache.resize(tenant.current_alloc_gb)
        elif decision.kind == DecisionKind.ADMIN_ALERT:
            alerts.append(alert_for(tenant.tenant_id, decision))
        decision_rows.append(_decision_row(mid, tenant.tenant_id, estimate, decision, tenant.current_alloc_gb))

        run_trace(cache, trace, latency, cfg.report_window, stats=stats, start=mid)
        after_start = mid + cfg.warmup_exclusion if mid + cfg.warmup_exclusion < n else mid
        after = stats.hit_rate_between(after_start, n)
        files.append(stats.to_csv(out_dir / f"{TIMESERIES_PREFIX}{tenant.tenant_id}.csv"))

        summary_rows.append([
            tenant.tenant_id, fmt(spec.initial_alloc_gb, 2), fmt(before, 2),
            fmt(latency.mean_latency(before / 100.0), 2), estimate.spec.label,
            fmt(tenant.current_alloc_gb, 2), fmt(after, 2), fmt(latency.mean_latency(after / 100.0), 2),
        ])

        if cfg.run_oracle:
            oracle = optimal_alloc_oracle(distribution, spec.data_gb, spec.required_hit_pct, cfg.grid_step_gb,
                                          seed, cfg.max_gb, cfg.oracle_queries)
            oracle_rows.append([tenant.tenant_id, distribution.label, fmt(oracle.cache_gb, 2),
                                fmt(oracle.hit_pct, 2), fmt(tenant.current_alloc_gb, 2),
                                "1" if oracle.satisfied else "0"])

    files.append(write_csv(out_dir / SUMMARY_FILE, SUMMARY_COLUMNS, summary_rows))
    files.append(write_csv(out_dir / DECISION_FILE, DECISION_COLUMNS, decision_rows))
    if oracle_rows:
        files.append(write_csv(out_dir / ORACLE_FILE, ORACLE_COLUMNS, oracle_rows))
    lines = [f"{row[0]}: {row[1]} GB ({row[2]}%) → {row[5]} GB ({row[6]}%)，估计 {row[4]}" for row in summary_rows]
    return ScenarioOutput(summary="\n".join(lines), files=files, alerts=alerts)


def _phase_rows(tenant_id: str, stats: RunStats, trace) -> List[List[str]]:
    rows = []
    for phase_id, (start, spec) in enumerate(zip(trace.phase_starts, trace.phase_specs)):
        records = [r for r in stats.records if r[5] == phase_id]
        end = trace.phase_starts[phase_id + 1] if phase_id + 1 < len(trace.phase_starts) else len(trace)
        mean_rate = float(np.mean([r[1] for r in records])) if records else 0.0
        start_gb = records[0][4] if records else 0.0
        end_gb = records[-1][4] if records else 0.0
        rows.append([tenant_id, str(phase_id), spec.label, str(end - start), fmt(start_gb, 2), fmt(end_gb, 2),
                     fmt(mean_rate, 2)])
    return rows


@register_scenario(name="multi_phase")
def multi_phase(cfg: ScenarioConfig, out_dir: Path, workers: Optional[int] = None) -> ScenarioOutput:
    """访问分布分阶段切换，每 control_interval 个查询估计一次，只在模式变化时调整"""
    out_dir = _prepare(cfg, out_dir)
    models = load_models(cfg.models_dir, ModelKind(cfg.model_kind))
    latency, grid = _latency(), _grid()
    pool = _initial_pool(cfg)

    decision_rows, phase_rows, alerts, files = [], [], [], []
    for index, spec in sorted(enumerate(cfg.tenants), key=lambda item: item[1].tenant_id):
        seed = derive_seed(cfg.seed, index)
        phases = [(phase.spec(), phase.queries) for phase in spec.phases]
        trace = concat_phases(phases, keyspace_from_gb(spec.data_gb), seed, spec.tenant_id)
        tenant = _tenant_state(spec, seed)
        cache = new_cache(validated(CacheConfig, capacity_gb=spec.initial_alloc_gb, node_count=cfg.node_count))

        stats = None
        position = 0
        for q in range(cfg.control_interval, len(trace), cfg.control_interval):
            stats = run_trace(cache, trace, latency, cfg.report_window, stats=stats, start=position, stop=q)
            position = q
            samples = trace.keys[max(0, q - cfg.sample_window):q]
            estimate, decision, pool = control_step(tenant, samples, pool, models, grid, cfg.grid_step_gb,
                                                    cfg.max_gb, only_on_pattern_change=True)
            if decision.is_resize:
                cache.resize(tenant.current_alloc_gb)
            elif decision.kind == DecisionKind.ADMIN_ALERT:
                alerts.append(alert_for(tenant.tenant_id, decision))
            decision_rows.append(_decision_row(q, tenant.tenant_id, estimate, decision, tenant.current_alloc_gb))
        stats = run_trace(cache, trace, latency, cfg.report_window, stats=stats, start=position)

        files.append(stats.to_csv(out_dir / f"{TIMESERIES_PREFIX}{tenant.tenant_id}.csv"))
        phase_rows.extend(_phase_rows(tenant.tenant_id, stats, trace))

    files.append(write_csv(out_dir / DECISION_FILE, DECISION_COLUMNS, decision_rows))
    files.append(write_csv(out_dir / PHASE_FILE, PHASE_COLUMNS, phase_rows))
    resizes = [row for row in decision_rows if row[-1] in ("grow", "shrink")]
    summary = "\n".join(f"@{row[0]} {row[1]} {row[-1]}: {row[5]} → {row[6]} GB ({row[2]} {row[3]})"
                        for row in resizes)
    return ScenarioOutput(summary=summary or "没有发生容量调整", files=files, alerts=alerts)


@register_scenario(name="two_tenant_ratio")
def two_tenant_ratio(cfg: ScenarioConfig, out_dir: Path, workers: Optional[int] = None) -> ScenarioOutput:
    """两个租户按比例分配共享缓存池，对比预测命中率和测量命中率"""
    out_dir = _prepare(cfg, out_dir)
    families = sorted({t.spec().family for t in cfg.tenants}, key=lambda f: f.code)
    models: Dict[Family, HitRateModel] = load_models(cfg.models_dir, ModelKind(cfg.model_kind), families)
    warmup = config.get("simulation.warmup_fraction", 0.5)

    rows = []
    for pool_gb in cfg.pool_sizes_gb:
        for index, spec in enumerate(cfg.tenants):
            distribution = spec.spec()
            # 第一个租户分到 ratio/10，第二个分到 (10-ratio)/10
            shares = [r / 10.0 if index == 0 else (10 - r) / 10.0 for r in cfg.ratios]
            allocs = [round(pool_gb * share, 6) for share in shares]
            measured = steady_hit_rate_curve(distribution, keyspace_from_gb(spec.data_gb), allocs, cfg.queries,
                                             warmup, derive_seed(cfg.seed, index))
            model = models[distribution.family]
            for ratio, alloc, hit in zip(cfg.ratios, allocs, measured):
                predicted = model.predict(FeatureVector(data_gb=spec.data_gb, cache_gb=alloc,
                                                        param=distribution.param))
                rows.append((pool_gb, ratio, index, [fmt(pool_gb, 2), f"{ratio}:{10 - ratio}", spec.tenant_id,
                                                     fmt(alloc, 2), fmt(predicted, 2), fmt(hit, 2)]))

    rows.sort(key=lambda item: item[:3])
    path = write_csv(out_dir / RATIO_FILE, RATIO_COLUMNS, [item[3] for item in rows])
    gaps = [abs(float(item[3][4]) - float(item[3][5])) for item in rows]
    summary = f"{len(rows)} 组分配，预测与测量的最大偏差 {max(gaps):.2f} 个百分点"
    return ScenarioOutput(summary=summary, files=[path])


@register_scenario(name="accuracy_study")
def accuracy_study(cfg: ScenarioConfig, out_dir: Path, workers: Optional[int] = None) -> ScenarioOutput:
    """不同样本数下KS估计的准确率"""
    out_dir = _prepare(cfg, out_dir)
    rows = run_accuracy_study(cfg.sample_counts, cfg.trials, cfg.seed, _grid(), cfg.data_gb, workers)
    path = write_accuracy_csv(rows, out_dir / "accuracy.csv")
    summary = "\n".join(f"样本数 {r.sample_count}: 分布族 {r.correct_family_pct:.1f}%，参数完全一致 "
                        f"{r.exact_param_pct:.1f}%，ε≤0.1 {r.eps_le_01_pct:.1f}%，ε≤0.2 {r.eps_le_02_pct:.1f}%"
                        for r in rows)
    return ScenarioOutput(summary=summary, files=[path])


@register_scenario(name="train_eval")
def train_eval(cfg: ScenarioConfig, out_dir: Path, workers: Optional[int] = None) -> ScenarioOutput:
    """生成训练/测试数据，训练各类模型并在测试网格上评估"""
    out_dir = _prepare(cfg, out_dir)
    files: List[Path] = []
    evaluation: List[Tuple[str, str, float]] = []
    for family_name in cfg.families:
        family = Family(family_name)
        kwargs = {"queries_per_point": cfg.queries_per_point, "workers": workers}
        train_set = build_training_set(family, seed=cfg.seed, **kwargs)
        test_set = build_test_set(family, seed=derive_seed(cfg.seed, 1), **kwargs)
        files.append(train_set.to_csv(out_dir / f"training_{family.value}.csv"))
        files.append(test_set.to_csv(out_dir / f"test_{family.value}.csv"))
        for kind_name in cfg.model_kinds:
            kind = ModelKind(kind_name)
            model = train_model(kind, train_set)
            files.append(save_model(model, model_path(cfg.models_dir, family, kind)))
            mse = evaluate(model, test_set, TRAINING_GRID[family])
            evaluation.append((family.value, kind.value, mse))
            logger.info(f"{family.value}/{kind.value} 测试集 MSE = {mse:.4f}")

    files.append(write_evaluation_csv(evaluation, out_dir / "evaluation.csv"))
    summary = "\n".join(f"{family:<12}{kind:<8}MSE {mse:.4f}" for family, kind, mse in evaluation)
    return ScenarioOutput(summary=summary, files=files)
