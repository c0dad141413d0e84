"""
有序的并行扇出：结果按输入顺序返回，与工作进程数无关
"""
import concurrent.futures
import logging
from typing import Any, Callable, List, Optional, Sequence

from .config import config
from .errors import CachePilotError

logger = logging.getLogger("cachepilot.parallel")


def _call_indexed(func: Callable[[Any], Any], index: int, item: Any):
    return index, func(item)


def fan_out(func: Callable[[Any], Any], items: Sequence[Any], workers: Optional[int] = None,
            label: str = "任务") -> List[Any]:
    """
    对每个元素调用 func（需可被 pickle 的顶层函数）

    workers 为 None 时取全局配置；为1或只有一个元素时在当前进程串行执行。
    """
    items = list(items)
    workers = config.get_workers() if workers is None else config.cap_workers(int(workers))
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: List[Any] = [None] * len(items)
    logger.info(f"并行执行 {len(items)} 个{label}，工作进程数 {workers}")
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        # 提交所有任务，包含索引信息
        futures = [executor.submit(_call_indexed, func, i, item) for i, item in enumerate(items)]

        # 收集结果并按原始顺序排列
        for future in concurrent.futures.as_completed(futures):
            try:
                index, value = future.result()
            except CachePilotError:
                raise
            except Exception as e:
                raise CachePilotError(f"{label}执行失败: {e}") from e
            results[index] = value
    return results
