"""
CachePilot - 多租户缓存容量的学习型管理实验台
访问分布估计、命中率预测、容量调整与共享缓存池预算
"""

__version__ = "1.0.0"
__author__ = "CachePilot"

from .scenario_manager import register_scenario, ScenarioRegistry, ScenarioResult
from .config import Config, config

# 导入场景定义以确保场景被注册
from . import scenarios

__all__ = ["register_scenario", "ScenarioRegistry", "ScenarioResult", "Config", "config"]
