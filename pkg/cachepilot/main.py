#!/usr/bin/env python3
"""
CachePilot 命令行入口

  cachepilot gen-trace | gen-training | train | run | accuracy-study | report
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import config
from .errors import CachePilotError, ExitCodes, InvalidArgumentError
from .estimator import accuracy_study, write_accuracy_csv
from .model_store import model_path, save_model
from .models import Family, FcnConfig, GridConfig, validated
from .predictor import (TRAINING_GRID, ModelKind, TrainingSet, build_test_set, build_training_set, evaluate,
                        train_model, write_evaluation_csv)
from .reports import render_report, write_figure_data
from .scenario_config import load_scenario
from .scenario_manager import scenario_registry
from .workload import export_csv, generate_trace, keyspace_from_gb, parse_distribution, write_trace

# 导入场景实现（确保它们被注册）
from . import scenarios  # noqa: F401

logger = logging.getLogger("cachepilot.main")

FAMILY_CHOICES = [f.value for f in Family]
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str):
    """日志输出到 stderr，stdout 只留给结果摘要"""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT,
                        stream=sys.stderr, force=True)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="随机种子")
    common.add_argument("--config", type=str, default=None, help="全局配置文件 (默认 config.json)")
    common.add_argument("--out", type=str, default=None, help="输出目录")
    common.add_argument("--workers", type=int, default=None, help="并行工作进程数")
    common.add_argument("--models", type=str, default=None, help="模型目录")
    common.add_argument("--log-level", type=str, default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="日志级别")
    return common


def build_parser() -> argparse.ArgumentParser:
    """解析命令行参数"""
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="cachepilot", description="CachePilot - 多租户缓存容量学习与调整实验台")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", parents=[common], help="生成访问序列")
    p.add_argument("--family", required=True, help="分布族: uniform/gaussian/exponential/zipf/ycsb-like")
    p.add_argument("--param", type=float, default=0.0, help="分布参数 (σ/λ/ρ)")
    p.add_argument("--data-gb", type=float, default=3.0, help="数据量 (GB)")
    p.add_argument("--length", type=int, default=1_000_000, help="查询数")
    p.add_argument("--tenant-id", type=str, default="tenant-1")
    p.add_argument("--csv", action="store_true", help="同时导出CSV")

    p = sub.add_parser("gen-training", parents=[common], help="生成训练/测试数据")
    p.add_argument("--family", required=True, choices=FAMILY_CHOICES)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--queries-per-point", type=int, default=None, help="每个网格点的查询数")

    p = sub.add_parser("train", parents=[common], help="训练命中率模型并在测试网格上评估")
    p.add_argument("--family", required=True, choices=FAMILY_CHOICES)
    p.add_argument("--kind", choices=[k.value for k in ModelKind], default="fcn")
    p.add_argument("--in", dest="in_csv", required=True, help="训练集CSV")
    p.add_argument("--test-csv", type=str, default=None, help="测试集CSV，缺省时用模拟器生成")
    p.add_argument("--queries-per-point", type=int, default=None, help="生成测试集时每个网格点的查询数")
    p.add_argument("--hidden", type=int, default=None, help="FCN 隐藏层神经元数")
    p.add_argument("--loss", choices=["mae", "mse"], default=None)
    p.add_argument("--activation", choices=["sigmoid", "relu"], default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--regularizer", choices=["l1", "l2"], default=None)
    p.add_argument("--cv", type=float, default=None, help="GPR 常数核")
    p.add_argument("--ls", type=float, default=None, help="GPR 长度尺度")
    p.add_argument("--noise", type=float, default=None, help="GPR 对角噪声")

    p = sub.add_parser("run", parents=[common], help="运行场景")
    p.add_argument("--scenario", required=True, help="场景JSON文件")

    p = sub.add_parser("accuracy-study", parents=[common], help="KS估计准确率统计")
    p.add_argument("--counts", type=str, default="100,200,300,500,1000,2000", help="样本数列表，逗号分隔")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--data-gb", type=float, default=3.0)

    p = sub.add_parser("report", parents=[common], help="渲染报表目录")
    p.add_argument("--dir", required=True, help="run 命令的输出目录")
    return parser


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_trace(args) -> int:
    spec = parse_distribution(args.family, args.param)
    seed = args.seed if args.seed is not None else 0
    trace = generate_trace(spec, keyspace_from_gb(args.data_gb), args.length, seed, args.tenant_id)
    out = _out_dir(args, "traces")
    name = f"{args.tenant_id}_{spec.family.value}_{spec.param:.1f}"
    path = write_trace(trace, out / f"{name}.cpt")
    print(f"✅ 序列已生成: {path} ({len(trace)} 个查询, {spec.label})")
    if args.csv:
        print(f"📄 CSV: {export_csv(trace, out / f'{name}.csv')}")
    return ExitCodes.OK


def cmd_gen_training(args) -> int:
    family = Family(args.family)
    seed = args.seed if args.seed is not None else 0
    if args.split == "train":
        data = build_training_set(family, seed=seed, queries_per_point=args.queries_per_point, workers=args.workers)
    else:
        data = build_test_set(family, seed=seed, queries_per_point=args.queries_per_point, workers=args.workers)
    path = data.to_csv(_out_dir(args, "data") / f"{args.split}_{family.value}.csv")
    print(f"✅ {args.split} 数据已生成: {path} ({len(data)} 行)")
    return ExitCodes.OK


def cmd_train(args) -> int:
    family = Family(args.family)
    kind = ModelKind(args.kind)
    data = TrainingSet.from_csv(args.in_csv)
    if data.family != family:
        raise InvalidArgumentError(f"训练集分布族 {data.family.value} 与 --family {family.value} 不一致")

    fcn_config = None
    if kind == ModelKind.FCN:
        settings = config.get_fcn_settings(family.value)
        for key, value in (("hidden_neurons", args.hidden), ("loss", args.loss), ("activation", args.activation),
                           ("epochs", args.epochs), ("regularizer", args.regularizer), ("seed", args.seed)):
            if value is not None:
                settings[key] = value
        fcn_config = validated(FcnConfig, **settings)
    gpr_settings = {k: v for k, v in (("cv", args.cv), ("ls", args.ls), ("noise", args.noise)) if v is not None}

    model = train_model(kind, data, fcn_config=fcn_config, gpr_settings=gpr_settings)
    path = save_model(model, model_path(args.models or config.get("models_dir", "models"), family, kind))
    print(f"✅ 模型已保存: {path}")

    if args.test_csv:
        test = TrainingSet.from_csv(args.test_csv)
    else:
        seed = args.seed if args.seed is not None else 1
        test = build_test_set(family, seed=seed, queries_per_point=args.queries_per_point, workers=args.workers)
    mse = evaluate(model, test, TRAINING_GRID[family])
    report = write_evaluation_csv([(family.value, kind.value, mse)],
                                  _out_dir(args, "reports") / f"evaluation_{family.value}_{kind.value}.csv")
    print(f"📊 测试集 MSE = {mse:.4f} ({report})")
    return ExitCodes.OK


def cmd_run(args) -> int:
    overrides = {"seed": args.seed, "out_dir": args.out, "models_dir": args.models}
    scenario = load_scenario(args.scenario, overrides)
    print(f"🚀 运行场景 {scenario.name} ({scenario.kind})")
    result = scenario_registry.execute(scenario.kind, scenario, out_dir=Path(scenario.out_dir),
                                       workers=args.workers)
    if result.success:
        print(result.to_detailed_string())
        if result.alerts:
            for alert in result.alerts:
                print(f"⚠️  上报管理员: {alert.tenant_id} 申请 {alert.requested_gb:.2f} GB，"
                      f"缺少 {alert.shortfall_gb:.2f} GB ({alert.reason})")
        print(f"✅ 结果目录: {scenario.out_dir}")
    else:
        print(f"❌ {result.to_string()}")
    return result.exit_code


def _parse_counts(text: str) -> List[int]:
    try:
        counts = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"样本数列表格式错误: {text}")
    if not counts:
        raise InvalidArgumentError("样本数列表为空")
    return counts


def cmd_accuracy_study(args) -> int:
    counts = _parse_counts(args.counts)
    grid = GridConfig.from_settings(config.get("estimator", {}))
    seed = args.seed if args.seed is not None else 0
    rows = accuracy_study(counts, args.trials, seed, grid, args.data_gb, args.workers)
    path = write_accuracy_csv(rows, _out_dir(args, "reports") / "accuracy.csv")
    for row in rows:
        print(f"📊 样本数 {row.sample_count:>5}: 分布族 {row.correct_family_pct:5.1f}%  参数 {row.exact_param_pct:5.1f}%"
              f"  ε≤0.1 {row.eps_le_01_pct:5.1f}%  ε≤0.2 {row.eps_le_02_pct:5.1f}%")
    print(f"✅ 结果已写入: {path}")
    return ExitCodes.OK


def cmd_report(args) -> int:
    report_dir = Path(args.dir)
    text = render_report(report_dir)
    print(text)
    for path in write_figure_data(report_dir):
        print(f"📈 绘图数据: {path}")
    return ExitCodes.OK


COMMANDS = {
    "gen-trace": cmd_gen_trace,
    "gen-training": cmd_gen_training,
    "train": cmd_train,
    "run": cmd_run,
    "accuracy-study": cmd_accuracy_study,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    if args.config:
        config.reload(args.config)
    if args.workers is not None:
        if args.workers < 1:
            print("❌ --workers 必须 >= 1")
            return ExitCodes.USAGE
        config.set("workers", args.workers)

    try:
        if args.seed is not None and args.seed < 0:
            raise InvalidArgumentError(f"--seed 必须 >= 0: {args.seed}")
        return COMMANDS[args.command](args)
    except CachePilotError as e:
        print(f"❌ {e}")
        return e.exit_code
    except KeyboardInterrupt:
        print("\n👋 已取消")
        return ExitCodes.USAGE


if __name__ == "__main__":
    sys.exit(main())
