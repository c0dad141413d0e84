"""
全局配置管理
"""
import os
import json
import copy
import logging
from typing import Dict, Any, List, Optional

logger = logging.getLogger("cachepilot.config")

DEFAULT_CONFIG: Dict[str, Any] = {
    "latency": {
        # 由均匀分布下两组实测值（命中率/响应时间）解二元一次方程得到
        "hit_ms": 1.49,
        "miss_ms": 4.93
    },
    "simulation": {
        "window": 10000,  # 报表窗口（查询数）
        "warmup_fraction": 0.5,  # 稳态命中率只统计后半段
        "queries_per_point": 500000,  # 训练集每个网格点的查询数
        "warmup_exclusion": 50000  # 调整容量后不计入QoS统计的查询数
    },
    "estimator": {
        "gaussian": {"min": 0.5, "max": 2.0},
        "exponential": {"min": 0.5, "max": 2.0},
        "zipf": {"min": 0.5, "max": 3.0},
        "step": 0.1,
        "p_threshold": 0.01,  # 低于该p值回退为均匀分布
        "min_samples": 30,
        "min_synthetic": 1000,  # 合成样本数 = max(样本数, min_synthetic)
        "pattern_change_tolerance": 0.15
    },
    "controller": {
        "delta1": 5.0,
        "delta2": 5.0,
        "grid_step_gb": 0.1,
        "max_gb": 4.0,
        "pool_total_gb": 18.0
    },
    "training": {
        "cache_min_gb": 0.1,
        "cache_max_gb": 4.0,
        "cache_step_gb": 0.1,
        "fcn": {
            # 每种分布的最优FCN配置
            "uniform": {"hidden_neurons": 16, "loss": "mae", "activation": "sigmoid", "epochs": 4000, "regularizer": "l2"},
            "gaussian": {"hidden_neurons": 64, "loss": "mse", "activation": "sigmoid", "epochs": 4000, "regularizer": "l2"},
            "exponential": {"hidden_neurons": 64, "loss": "mse", "activation": "sigmoid", "epochs": 4000, "regularizer": "l2"},
            "zipf": {"hidden_neurons": 32, "loss": "mae", "activation": "sigmoid", "epochs": 500, "regularizer": "l2"}
        },
        "gpr": {
            "uniform": {"cv": 1.0, "ls": 10.0, "noise": 1e-6},
            "gaussian": {"cv": 1000.0, "ls": 1.0, "noise": 1e-6},
            "exponential": {"cv": 1000.0, "ls": 1.0, "noise": 1e-6},
            "zipf": {"cv": 1000.0, "ls": 1.0, "noise": 1e-6}
        }
    },
    "models_dir": "models",
    "workers": 1  # 0 表示使用CPU核数
}


class Config:
    """配置类：JSON文件深度合并到内置默认值之上"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or os.environ.get("CACHEPILOT_CONFIG", "config.json")
        self.data = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """加载配置文件，文件不存在时使用默认值"""
        default_config = copy.deepcopy(DEFAULT_CONFIG)

        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    user_config = json.load(f)
                    self._deep_merge(default_config, user_config)
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"配置文件加载失败: {self.config_file}: {e}")

        return default_config

    def _deep_merge(self, default: Dict[str, Any], user: Dict[str, Any]):
        """深度合并配置字典"""
        for key, value in user.items():
            if key in default and isinstance(default[key], dict) and isinstance(value, dict):
                self._deep_merge(default[key], value)
            else:
                default[key] = value

    def get(self, key: str, default=None):
        """获取配置值，支持点号分隔的键"""
        keys = key.split('.')
        value = self.data
        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any):
        """设置配置值，支持点号分隔的键"""
        keys = key.split('.')
        config = self.data

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def reload(self, config_file: Optional[str] = None):
        """切换配置文件并重新加载（命令行 --config）"""
        if config_file:
            self.config_file = config_file
        self.data = self._load_config()

    def get_workers(self) -> int:
        """并行工作进程数：配置为0时取CPU核数"""
        return self.cap_workers(int(self.get("workers", 0) or 0) or (os.cpu_count() or 1))

    def cap_workers(self, workers: int) -> int:
        """环境变量 CACHEPILOT_WORKERS 为工作进程数上限"""
        cap = os.environ.get("CACHEPILOT_WORKERS")
        if cap:
            try:
                workers = min(workers, int(cap))
            except ValueError:
                logger.warning(f"忽略无效的 CACHEPILOT_WORKERS: {cap}")
        return max(1, workers)

    def get_latency(self) -> Dict[str, float]:
        return self.get("latency", {})

    def get_cache_grid(self) -> List[float]:
        """训练/预测使用的缓存容量网格（GB）"""
        lo = self.get("training.cache_min_gb", 0.1)
        hi = self.get("training.cache_max_gb", 4.0)
        step = self.get("training.cache_step_gb", 0.1)
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 6) for i in range(count)]

    def get_fcn_settings(self, family: str) -> Dict[str, Any]:
        return dict(self.get(f"training.fcn.{family}", {}) or {})

    def get_gpr_settings(self, family: str) -> Dict[str, Any]:
        return dict(self.get(f"training.gpr.{family}", {}) or {})

    def get_controller_settings(self) -> Dict[str, Any]:
        return dict(self.get("controller", {}) or {})


# 全局配置实例
config = Config()
