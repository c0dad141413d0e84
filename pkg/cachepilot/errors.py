"""
错误码与异常定义
"""


class ErrorCodes:
    """统一错误码"""
    INVALID_ARGUMENT = "INVALID_ARGUMENT"
    FORMAT_ERROR = "FORMAT_ERROR"
    STATE_ERROR = "STATE_ERROR"
    NUMERIC_ERROR = "NUMERIC_ERROR"
    TRAINING_ERROR = "TRAINING_ERROR"
    QOS_UNSATISFIABLE = "QOS_UNSATISFIABLE"
    SCENARIO_NOT_FOUND = "SCENARIO_NOT_FOUND"
    EXECUTION_ERROR = "EXECUTION_ERROR"


class ExitCodes:
    """命令行退出码"""
    OK = 0
    USAGE = 2
    DATA = 3
    QOS = 4


# 错误码 -> 退出码
EXIT_CODE_BY_ERROR = {
    ErrorCodes.INVALID_ARGUMENT: ExitCodes.USAGE,
    ErrorCodes.SCENARIO_NOT_FOUND: ExitCodes.USAGE,
    ErrorCodes.FORMAT_ERROR: ExitCodes.DATA,
    ErrorCodes.STATE_ERROR: ExitCodes.DATA,
    ErrorCodes.NUMERIC_ERROR: ExitCodes.DATA,
    ErrorCodes.TRAINING_ERROR: ExitCodes.DATA,
    ErrorCodes.EXECUTION_ERROR: ExitCodes.DATA,
    ErrorCodes.QOS_UNSATISFIABLE: ExitCodes.QOS,
}


class CachePilotError(Exception):
    """所有业务异常的基类"""

    code = ErrorCodes.EXECUTION_ERROR

    def __init__(self, message: str, code: str = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code

    @property
    def exit_code(self) -> int:
        return EXIT_CODE_BY_ERROR.get(self.code, ExitCodes.DATA)

    def __str__(self) -> str:
        return f"错误[{self.code}]: {self.message}"


class InvalidArgumentError(CachePilotError, ValueError):
    """参数不合法"""
    code = ErrorCodes.INVALID_ARGUMENT


class FormatError(CachePilotError):
    """文件格式错误（截断、版本不匹配、CSV表头不符等）"""
    code = ErrorCodes.FORMAT_ERROR


class StateError(CachePilotError):
    """对象状态不允许该操作，例如模型未训练"""
    code = ErrorCodes.STATE_ERROR


class NumericError(CachePilotError):
    """数值计算失败，例如核矩阵非正定"""
    code = ErrorCodes.NUMERIC_ERROR


class TrainingError(CachePilotError):
    """训练数据退化或训练失败"""
    code = ErrorCodes.TRAINING_ERROR


class QoSUnsatisfiableError(CachePilotError):
    """共享缓存池无法满足租户的命中率要求"""
    code = ErrorCodes.QOS_UNSATISFIABLE
