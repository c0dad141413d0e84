"""
场景管理器 - 场景注册、执行和统一的结果格式
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .errors import EXIT_CODE_BY_ERROR, CachePilotError, ErrorCodes, ExitCodes
from .models import AdminAlert

logger = logging.getLogger("cachepilot.scenario_manager")


@dataclass
class ScenarioOutput:
    """场景函数的返回值"""
    summary: str = ""
    files: List[Path] = field(default_factory=list)
    alerts: List[AdminAlert] = field(default_factory=list)


class ScenarioResult:
    """统一的场景执行结果格式"""

    def __init__(
        self,
        scenario_name: str,
        parameters: Dict[str, Any],
        success: bool,
        data: str = "",
        error_code: str = None,
        error_message: str = None,
        execution_time: float = 0.0,
        files: Optional[List[Path]] = None,
        alerts: Optional[List[AdminAlert]] = None
    ):
        self.scenario_name = scenario_name
        self.parameters = parameters
        self.success = success
        self.data = data
        self.error_code = error_code
        self.error_message = error_message
        self.execution_time = execution_time
        self.files = list(files or [])
        self.alerts = list(alerts or [])
        self.timestamp = time.time()

    @property
    def alert_count(self) -> int:
        return len(self.alerts)

    @property
    def exit_code(self) -> int:
        """成功且没有上报事件为0，有上报事件为4，失败按错误码映射"""
        if not self.success:
            return EXIT_CODE_BY_ERROR.get(self.error_code, ExitCodes.DATA)
        return ExitCodes.QOS if self.alerts else ExitCodes.OK

    def to_string(self) -> str:
        """转换为字符串格式"""
        if self.success:
            return self.data
        if self.error_code:
            return f"错误[{self.error_code}]: {self.error_message}"
        return f"错误: {self.error_message}"

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "scenario_name": self.scenario_name,
            "parameters": self.parameters,
            "success": self.success,
            "data": self.data,
            "error_code": self.error_code,
            "error_message": self.error_message,
            "execution_time": self.execution_time,
            "files": [str(p) for p in self.files],
            "alert_count": self.alert_count,
            "timestamp": self.timestamp
        }

    def to_detailed_string(self) -> str:
        """转换为详细的字符串格式"""
        result = f"场景: {self.scenario_name}\n"
        result += f"执行时间: {self.execution_time:.3f}秒\n"
        if self.success:
            result += f"输出文件: {len(self.files)} 个\n"
            if self.alerts:
                result += f"上报管理员: {self.alert_count} 次\n"
            result += self.data
        else:
            result += "执行失败\n"
            if self.error_code:
                result += f"错误码: {self.error_code}\n"
            result += f"报错信息: {self.error_message}"
        return result


class ScenarioRegistry:
    """场景注册表"""

    def __init__(self):
        self.scenarios: Dict[str, Dict[str, Any]] = {}

    def register(self, name: str, func: Callable, description: str):
        """注册场景"""
        if name in self.scenarios:
            # 场景已存在，跳过重复注册
            return
        self.scenarios[name] = {
            "name": name,
            "function": func,
            "description": description.strip(),
        }

    def execute(self, name: str, scenario_config: Any, **kwargs) -> ScenarioResult:
        """执行场景并返回统一格式的结果"""
        start_time = time.time()
        parameters = scenario_config.model_dump(mode="json") if hasattr(scenario_config, "model_dump") else {}

        if name not in self.scenarios:
            return ScenarioResult(
                scenario_name=name,
                parameters=parameters,
                success=False,
                error_code=ErrorCodes.SCENARIO_NOT_FOUND,
                error_message=f"场景 {name} 不存在，可用场景: {', '.join(sorted(self.scenarios))}",
                execution_time=time.time() - start_time
            )

        func = self.scenarios[name]["function"]
        try:
            output: ScenarioOutput = func(scenario_config, **kwargs)
        except CachePilotError as e:
            logger.error(f"场景 {name} 失败: {e}")
            return ScenarioResult(
                scenario_name=name,
                parameters=parameters,
                success=False,
                error_code=e.code,
                error_message=e.message,
                execution_time=time.time() - start_time
            )
        except Exception as e:
            logger.exception(f"场景 {name} 执行异常")
            return ScenarioResult(
                scenario_name=name,
                parameters=parameters,
                success=False,
                error_code=ErrorCodes.EXECUTION_ERROR,
                error_message=f"执行场景 {name} 失败: {str(e)}",
                execution_time=time.time() - start_time
            )

        return ScenarioResult(
            scenario_name=name,
            parameters=parameters,
            success=True,
            data=output.summary,
            execution_time=time.time() - start_time,
            files=output.files,
            alerts=output.alerts
        )

    def list_scenarios(self) -> List[Dict[str, Any]]:
        """列出所有场景"""
        return [
            {"name": name, "description": info["description"]}
            for name, info in self.scenarios.items()
        ]


# 全局场景注册表
scenario_registry = ScenarioRegistry()


def register_scenario(name: str = None, description: str = None):
    """装饰器：注册场景"""
    def decorator(func):
        scenario_name = name or func.__name__
        scenario_desc = description or func.__doc__ or f"场景: {scenario_name}"
        scenario_registry.register(scenario_name, func, scenario_desc)
        return func
    return decorator
