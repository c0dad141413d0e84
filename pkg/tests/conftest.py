"""
公共fixture：全局配置复位、慢速测试开关、场景测试用的模型目录
"""
import copy
import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from cachepilot.config import DEFAULT_CONFIG, config
from cachepilot.model_store import model_path, save_model
from cachepilot.models import Family
from cachepilot.predictor import ModelKind, fit_log
from cachepilot.workload import make_rng

SCENARIO_DIR = os.path.join(_ROOT, "scenarios")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行慢速的统计与端到端测试")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 慢速测试，需要 --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def default_config():
    """每个测试都从内置默认配置开始"""
    original_file, original_data = config.config_file, config.data
    config.data = copy.deepcopy(DEFAULT_CONFIG)
    yield config
    config.config_file, config.data = original_file, original_data


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def logfit_models_dir(tmp_path):
    """
    四个分布族共用同一条对数曲线: H(0.1)=20%，H(0.5)=100%

    曲线与估计结果无关，场景中的调整目标因此是确定的。
    """
    models_dir = tmp_path / "models"
    for family in Family:
        model = fit_log([(0.1, 20.0), (0.5, 100.0)], family)
        save_model(model, model_path(models_dir, family, ModelKind.LOGFIT))
    return models_dir


def assert_close(actual, expected, tol):
    assert abs(np.asarray(actual) - np.asarray(expected)).max() <= tol, f"{actual} != {expected} ± {tol}"
