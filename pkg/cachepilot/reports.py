"""
报表文件：CSV 写入/读取，以及 report 命令的文本渲染
"""
import csv
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

from .cachesim import RUN_STATS_COLUMNS
from .errors import FormatError

logger = logging.getLogger("cachepilot.reports")

SUMMARY_COLUMNS = ["tenant_id", "initial_gb", "initial_hit_pct", "initial_latency_ms", "est_distribution",
                   "new_gb", "measured_hit_pct", "measured_latency_ms"]
DECISION_COLUMNS = ["query_index", "tenant_id", "est_family", "est_param", "p_value", "old_gb", "new_gb",
                    "predicted_hit_pct", "decision_kind"]
ORACLE_COLUMNS = ["tenant_id", "distribution", "optimal_gb", "optimal_hit_pct", "predicted_gb", "satisfied"]
PHASE_COLUMNS = ["tenant_id", "phase_id", "distribution", "queries", "start_gb", "end_gb", "mean_window_hit_pct"]
RATIO_COLUMNS = ["pool_gb", "ratio", "tenant_id", "alloc_gb", "predicted_hit_pct", "measured_hit_pct"]
FIGURE_COLUMNS = ["query_index", "window_hit_rate_pct", "window_mean_latency_ms", "cache_gb"]

SUMMARY_FILE = "summary.csv"
DECISION_FILE = "decisions.csv"
ORACLE_FILE = "oracle.csv"
PHASE_FILE = "phases.csv"
RATIO_FILE = "ratio.csv"
TIMESERIES_PREFIX = "timeseries_"


def fmt(value: float, digits: int = 4) -> str:
    """固定小数位，保证输出文件逐字节可复现"""
    return f"{value:.{digits}f}"


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(list(header))
        writer.writerows(rows)
    return path


def read_csv(path: Union[str, Path], header: Sequence[str]) -> List[Dict[str, str]]:
    """读取CSV并校验表头和列数"""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"报表文件不存在: {path}")
    try:
        with open(path, "r", newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            actual = next(reader, None)
            if actual != list(header):
                raise FormatError(f"报表文件表头不符: {path.name}，实际 {actual}")
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise FormatError(f"报表文件 {path.name} 第 {line_no} 行列数不符")
                rows.append(dict(zip(header, row)))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise FormatError(f"无法读取报表文件 {path.name}: {e}")
    return rows


def _float(row: Dict[str, str], key: str, path: Path) -> float:
    try:
        return float(row[key])
    except ValueError:
        raise FormatError(f"报表文件 {path.name} 字段 {key} 不是数值: {row[key]}")


def write_figure_data(report_dir: Path) -> List[Path]:
    """从时间序列提取绘图用数据（命中率、延迟、缓存容量）"""
    written = []
    for series in sorted(report_dir.glob(f"{TIMESERIES_PREFIX}*.csv")):
        rows = read_csv(series, RUN_STATS_COLUMNS)
        tenant = series.stem[len(TIMESERIES_PREFIX):]
        out = report_dir / f"figure_{tenant}.csv"
        write_csv(out, FIGURE_COLUMNS, [[r[c] for c in FIGURE_COLUMNS] for r in rows])
        written.append(out)
    return written


def render_report(report_dir: Union[str, Path]) -> str:
    """渲染报表目录中的结果表格"""
    report_dir = Path(report_dir)
    if not report_dir.is_dir():
        raise FormatError(f"报表目录不存在: {report_dir}")

    lines: List[str] = []
    summary = report_dir / SUMMARY_FILE
    if summary.exists():
        path = summary
        lines.append("调整前后对比（延迟为两点模型）")
        lines.append(f"{'租户':<12}{'初始容量':>10}{'初始命中率':>12}{'初始延迟':>10}  {'估计分布':<18}"
                     f"{'新容量':>8}{'命中率':>10}{'延迟':>8}")
        for row in read_csv(path, SUMMARY_COLUMNS):
            lines.append(f"{row['tenant_id']:<12}{_float(row, 'initial_gb', path):>10.2f}"
                         f"{_float(row, 'initial_hit_pct', path):>11.1f}%{_float(row, 'initial_latency_ms', path):>10.2f}"
                         f"  {row['est_distribution']:<18}{_float(row, 'new_gb', path):>8.2f}"
                         f"{_float(row, 'measured_hit_pct', path):>9.1f}%{_float(row, 'measured_latency_ms', path):>8.2f}")

    oracle = report_dir / ORACLE_FILE
    if oracle.exists():
        lines.append("")
        lines.append("与测量最优容量对比")
        for row in read_csv(oracle, ORACLE_COLUMNS):
            mark = "" if row["satisfied"] == "1" else " (未达到)"
            lines.append(f"  {row['tenant_id']}: {row['distribution']} 最优 {row['optimal_gb']} GB"
                         f" ({row['optimal_hit_pct']}%){mark}，预测分配 {row['predicted_gb']} GB")

    phases = report_dir / PHASE_FILE
    if phases.exists():
        lines.append("")
        lines.append("阶段汇总")
        for row in read_csv(phases, PHASE_COLUMNS):
            lines.append(f"  {row['tenant_id']} 阶段{row['phase_id']} {row['distribution']:<16}"
                         f" {row['start_gb']} → {row['end_gb']} GB，平均窗口命中率 {row['mean_window_hit_pct']}%")

    decisions = report_dir / DECISION_FILE
    if decisions.exists():
        rows = read_csv(decisions, DECISION_COLUMNS)
        resizes = [r for r in rows if r["decision_kind"] in ("grow", "shrink", "admin_alert")]
        lines.append("")
        lines.append(f"决策记录: {len(rows)} 条，其中调整/上报 {len(resizes)} 条")
        for row in resizes:
            lines.append(f"  @{row['query_index']} {row['tenant_id']} {row['decision_kind']}: "
                         f"{row['old_gb']} → {row['new_gb']} GB (估计 {row['est_family']}({row['est_param']}),"
                         f" 预测 {row['predicted_hit_pct']}%)")

    ratio = report_dir / RATIO_FILE
    if ratio.exists():
        lines.append("")
        lines.append("两租户分配比例")
        for row in read_csv(ratio, RATIO_COLUMNS):
            lines.append(f"  池 {row['pool_gb']} GB 比例 {row['ratio']}: {row['tenant_id']} {row['alloc_gb']} GB"
                         f" 预测 {row['predicted_hit_pct']}% 测量 {row['measured_hit_pct']}%")

    for series in sorted(report_dir.glob(f"{TIMESERIES_PREFIX}*.csv")):
        rows = read_csv(series, RUN_STATS_COLUMNS)
        lines.append("")
        lines.append(f"{series.name}: {len(rows)} 个窗口")

    if not lines:
        raise FormatError(f"报表目录中没有可识别的结果文件: {report_dir}")
    return "\n".join(lines)
