"""
命中率回归模型

H(cache_gb, d) 按分布族分别建模，输入特征为 (数据量, 缓存容量, 分布参数)：
  - FcnModel:   dense(3→20, ReLU) → BatchNorm → dense(20→H, 激活+正则) → dense(H→1)，Adam 训练
  - GprModel:   常数核 × RBF 核的高斯过程回归（后验均值）
  - LogFitModel: y = a + b·ln(x) 最小二乘基线

训练目标来自 cachesim 的稳态命中率。
"""
import csv
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from scipy.special import expit

from .cachesim import steady_hit_rate_curve
from .config import config
from .errors import FormatError, InvalidArgumentError, NumericError, StateError, TrainingError
from .models import DistributionSpec, Family, FcnConfig, validated
from .parallel import fan_out
from .workload import keyspace_from_gb, make_rng

logger = logging.getLogger("cachepilot.predictor")

TRAINING_SET_COLUMNS = ["family", "param", "data_gb", "cache_gb", "hit_rate_pct"]
EVALUATION_COLUMNS = ["family", "model_kind", "mse"]

INPUT_NEURONS = 20
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
BN_MOMENTUM = 0.9
BN_EPS = 1e-5

GPR_SWEEP_VALUES = [10.0 ** e for e in range(-4, 4)]
FCN_SWEEP_NEURONS = [16, 32, 64, 128, 256]
FCN_SWEEP_EPOCHS = [500, 1000, 2000, 4000]

_ZIPF_PARAMS = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
_DATA_1_TO_9 = [float(v) for v in range(1, 10)]

# 分布族 -> (数据量列表, 参数列表)
TRAINING_GRID: Dict[Family, Tuple[List[float], List[float]]] = {
    Family.UNIFORM: ([1.0, 2.0, 4.0, 8.0], [0.0]),
    Family.GAUSSIAN: (_DATA_1_TO_9, [0.5, 1.0, 1.5, 2.0]),
    Family.EXPONENTIAL: (_DATA_1_TO_9, [0.5, 1.0, 1.5, 2.0]),
    Family.ZIPF: (_DATA_1_TO_9, _ZIPF_PARAMS),
}

TEST_GRID: Dict[Family, Tuple[List[float], List[float]]] = {
    Family.UNIFORM: ([3.0, 6.0], [0.0]),
    Family.GAUSSIAN: (_DATA_1_TO_9, [0.7, 1.2, 1.9]),
    Family.EXPONENTIAL: (_DATA_1_TO_9, [0.7, 1.2, 1.9]),
    Family.ZIPF: (_DATA_1_TO_9, [0.7, 1.2, 1.9, 2.3, 2.6]),
}


class ModelKind(str, Enum):
    FCN = "fcn"
    GPR = "gpr"
    LOGFIT = "logfit"

    @property
    def code(self) -> int:
        return list(ModelKind).index(self)

    @classmethod
    def from_code(cls, code: int) -> "ModelKind":
        kinds = list(cls)
        if not 0 <= code < len(kinds):
            raise FormatError(f"未知的模型类型编码: {code}")
        return kinds[code]


class FeatureVector(BaseModel):
    """预测输入"""
    model_config = ConfigDict(frozen=True)

    data_gb: float = Field(gt=0)
    cache_gb: float = Field(gt=0)
    param: float = Field(default=0.0, ge=0)

    def as_array(self) -> np.ndarray:
        return np.array([self.data_gb, self.cache_gb, self.param], dtype=np.float64)


@dataclass
class Standardizer:
    """z-score 标准化，标准差为0的列按1处理"""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.std + self.mean


@dataclass
class TrainingSet:
    """某个分布族的训练/测试数据，X 的列为 (data_gb, cache_gb, param)"""
    family: Family
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, 3)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise InvalidArgumentError(f"特征行数 {self.X.shape[0]} 与目标数 {self.y.shape[0]} 不一致")
        if self.y.size and (self.y.min() < 0 or self.y.max() > 100):
            raise InvalidArgumentError("命中率目标必须在 [0, 100] 内")

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def feature_stats(self) -> Standardizer:
        return Standardizer.fit(self.X)

    def pairs(self) -> List[Tuple[float, float]]:
        """出现过的 (数据量, 参数) 组合"""
        seen = []
        for data_gb, param in self.X[:, [0, 2]].tolist():
            if (data_gb, param) not in seen:
                seen.append((data_gb, param))
        return seen

    def curve(self, data_gb: float, param: float) -> Tuple[np.ndarray, np.ndarray]:
        """某个 (数据量, 参数) 的 (缓存容量, 命中率) 曲线"""
        mask = np.isclose(self.X[:, 0], data_gb) & np.isclose(self.X[:, 2], param)
        return self.X[mask, 1], self.y[mask]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(TRAINING_SET_COLUMNS)
            for (data_gb, cache_gb, param), target in zip(self.X.tolist(), self.y.tolist()):
                writer.writerow([self.family.value, f"{param:.2f}", f"{data_gb:.2f}", f"{cache_gb:.2f}", f"{target:.6f}"])
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TrainingSet":
        path = Path(path)
        try:
            with open(path, "r", newline="", encoding="utf-8") as f:
                reader = csv.reader(f)
                header = next(reader, None)
                if header != TRAINING_SET_COLUMNS:
                    raise FormatError(f"训练集表头不符 {path}: {header}")
                families, rows, targets = set(), [], []
                for line_no, row in enumerate(reader, start=2):
                    if len(row) != len(TRAINING_SET_COLUMNS):
                        raise FormatError(f"训练集 {path} 第 {line_no} 行列数不符")
                    families.add(row[0])
                    param, data_gb, cache_gb, target = (float(v) for v in row[1:])
                    rows.append((data_gb, cache_gb, param))
                    targets.append(target)
        except OSError as e:
            raise FormatError(f"无法读取训练集 {path}: {e}")
        except ValueError as e:
            raise FormatError(f"训练集 {path} 含有非数值字段: {e}")
        if len(families) != 1:
            raise FormatError(f"训练集 {path} 必须只包含一个分布族: {sorted(families)}")
        try:
            family = Family(families.pop())
        except ValueError as e:
            raise FormatError(f"训练集 {path} 分布族未知: {e}")
        return cls(family=family, X=np.array(rows), y=np.array(targets))


def _curve_job(job: Tuple[Callable, DistributionSpec, float, List[float], int, float, int]) -> List[float]:
    oracle, spec, data_gb, cache_grid, queries, warmup_fraction, seed = job
    return list(oracle(spec, keyspace_from_gb(data_gb), cache_grid, queries, warmup_fraction, seed))


def build_training_set(family: Family, oracle: Callable = steady_hit_rate_curve,
                       grid: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                       queries_per_point: Optional[int] = None, seed: int = 0,
                       cache_grid: Optional[Sequence[float]] = None, warmup_fraction: Optional[float] = None,
                       workers: Optional[int] = None) -> TrainingSet:
    """
    对网格中每个 (数据量, 参数) 用模拟器生成一条命中率曲线

    行顺序为 数据量 → 参数 → 缓存容量，与工作进程数无关。
    """
    family = Family(family)
    data_sizes, params = grid if grid is not None else TRAINING_GRID[family]
    if not data_sizes or not params:
        raise InvalidArgumentError("训练网格不能为空")
    cache_grid = list(cache_grid) if cache_grid is not None else config.get_cache_grid()
    queries = int(queries_per_point or config.get("simulation.queries_per_point", 500000))
    warmup = config.get("simulation.warmup_fraction", 0.5) if warmup_fraction is None else warmup_fraction

    jobs = []
    combos = [(float(d), float(p)) for d in data_sizes for p in params]
    for index, (data_gb, param) in enumerate(combos):
        spec = validated(DistributionSpec, family=family, param=param)
        job_seed = int(np.random.SeedSequence([int(seed), family.code, index]).generate_state(1)[0])
        jobs.append((oracle, spec, data_gb, cache_grid, queries, warmup, job_seed))

    logger.info(f"生成 {family.value} 训练数据: {len(combos)} 条曲线 × {len(cache_grid)} 个容量")
    curves = fan_out(_curve_job, jobs, workers, label="命中率曲线")

    rows, targets = [], []
    for (data_gb, param), curve in zip(combos, curves):
        for cache_gb, rate in zip(cache_grid, curve):
            rows.append((data_gb, cache_gb, param))
            targets.append(rate)
    return TrainingSet(family=family, X=np.array(rows), y=np.array(targets))


def build_test_set(family: Family, **kwargs) -> TrainingSet:
    """测试网格上的数据集"""
    family = Family(family)
    kwargs.setdefault("seed", 1)
    return build_training_set(family, grid=TEST_GRID[family], **kwargs)


class HitRateModel(ABC):
    """命中率模型基类，预测值总是截断到 [0, 100]"""

    kind: ModelKind

    def __init__(self, family: Family):
        self.family = Family(family)
        self.trained = False

    @abstractmethod
    def _raw_predict(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def state(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        """(元数据, 参数块)，用于模型文件"""

    @classmethod
    @abstractmethod
    def from_state(cls, family: Family, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> "HitRateModel":
        ...

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        if not self.trained:
            raise StateError(f"{self.kind.value} 模型（{self.family.value}）尚未训练")
        X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
        out = self._raw_predict(X)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"{self.kind.value} 模型输出非有限值")
        return np.clip(out, 0.0, 100.0)

    def predict(self, x: FeatureVector) -> float:
        return float(self.predict_many(x.as_array())[0])

    def curve(self, data_gb: float, param: float, cache_grid: Sequence[float]) -> np.ndarray:
        """固定数据量和参数时，网格上每个缓存容量的预测命中率"""
        grid = np.asarray(cache_grid, dtype=np.float64)
        X = np.column_stack([np.full_like(grid, data_gb), grid, np.full_like(grid, param)])
        return self.predict_many(X)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class FcnModel(HitRateModel):
    """全连接网络回归"""

    kind = ModelKind.FCN
    PARAM_NAMES = ("W1", "b1", "gamma", "beta", "W2", "b2", "W3", "b3")

    def __init__(self, family: Family, fcn_config: Optional[FcnConfig] = None):
        super().__init__(family)
        self.config = fcn_config or FcnConfig()
        self.params: Dict[str, np.ndarray] = {}
        self.running_mean = np.zeros(INPUT_NEURONS)
        self.running_var = np.ones(INPUT_NEURONS)
        self.scaler: Optional[Standardizer] = None
        self.y_mean = 0.0
        self.y_std = 1.0
        self.loss_history: List[float] = []

    def init_params(self, rng: np.random.Generator):
        hidden = self.config.hidden_neurons
        self.params = {
            "W1": _xavier(rng, 3, INPUT_NEURONS),
            "b1": np.zeros(INPUT_NEURONS),
            "gamma": np.ones(INPUT_NEURONS),
            "beta": np.zeros(INPUT_NEURONS),
            "W2": _xavier(rng, INPUT_NEURONS, hidden),
            "b2": np.zeros(hidden),
            "W3": _xavier(rng, hidden, 1),
            "b3": np.zeros(1),
        }
        self.running_mean = np.zeros(INPUT_NEURONS)
        self.running_var = np.ones(INPUT_NEURONS)

    def _activate(self, z: np.ndarray) -> np.ndarray:
        if self.config.activation == "sigmoid":
            return expit(z)
        return np.maximum(z, 0.0)

    def _activate_grad(self, z: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.config.activation == "sigmoid":
            return a * (1.0 - a)
        return (z > 0).astype(np.float64)

    def _forward(self, Xs: np.ndarray, training: bool) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        p = self.params
        z1 = Xs @ p["W1"] + p["b1"]
        a1 = np.maximum(z1, 0.0)
        if training:
            mu = a1.mean(axis=0)
            var = a1.var(axis=0)
        else:
            mu, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (a1 - mu) * inv_std
        bn = p["gamma"] * xhat + p["beta"]
        z2 = bn @ p["W2"] + p["b2"]
        a2 = self._activate(z2)
        out = (a2 @ p["W3"] + p["b3"]).reshape(-1)
        cache = {"Xs": Xs, "z1": z1, "mu": mu, "var": var, "inv_std": inv_std,
                 "xhat": xhat, "bn": bn, "z2": z2, "a2": a2}
        return out, cache

    def _regularization(self) -> Tuple[float, np.ndarray]:
        W2 = self.params["W2"]
        coef = self.config.l2_coefficient
        if self.config.regularizer == "l1":
            return coef * float(np.abs(W2).sum()), coef * np.sign(W2)
        return coef * float((W2 ** 2).sum()), 2.0 * coef * W2

    def loss_and_grads(self, Xs: np.ndarray, t: np.ndarray, training: bool = False,
                       update_running: bool = False) -> Tuple[float, Dict[str, np.ndarray]]:
        """标准化输入 Xs、标准化目标 t 上的损失与梯度"""
        out, c = self._forward(Xs, training)
        batch = out.shape[0]
        diff = out - t
        reg_loss, reg_grad = self._regularization()
        if self.config.loss == "mse":
            loss = float(np.mean(diff ** 2)) + reg_loss
            dout = 2.0 * diff / batch
        else:
            loss = float(np.mean(np.abs(diff))) + reg_loss
            dout = np.sign(diff) / batch

        p = self.params
        grads: Dict[str, np.ndarray] = {}
        dout = dout.reshape(-1, 1)
        grads["W3"] = c["a2"].T @ dout
        grads["b3"] = dout.sum(axis=0)
        dz2 = (dout @ p["W3"].T) * self._activate_grad(c["z2"], c["a2"])
        grads["W2"] = c["bn"].T @ dz2 + reg_grad
        grads["b2"] = dz2.sum(axis=0)
        dbn = dz2 @ p["W2"].T
        grads["gamma"] = (dbn * c["xhat"]).sum(axis=0)
        grads["beta"] = dbn.sum(axis=0)
        dxhat = dbn * p["gamma"]
        if training:
            da1 = (c["inv_std"] / batch) * (
                batch * dxhat - dxhat.sum(axis=0) - c["xhat"] * (dxhat * c["xhat"]).sum(axis=0))
        else:
            da1 = dxhat * c["inv_std"]
        dz1 = da1 * (c["z1"] > 0)
        grads["W1"] = c["Xs"].T @ dz1
        grads["b1"] = dz1.sum(axis=0)

        if training and update_running:
            self.running_mean = BN_MOMENTUM * self.running_mean + (1 - BN_MOMENTUM) * c["mu"]
            self.running_var = BN_MOMENTUM * self.running_var + (1 - BN_MOMENTUM) * c["var"]
        return loss, grads

    def fit(self, training_set: TrainingSet) -> "FcnModel":
        cfg = self.config
        X, y = training_set.X, training_set.y
        n = len(training_set)
        if n < cfg.batch_size:
            raise TrainingError(f"训练样本数 {n} 少于批大小 {cfg.batch_size}")
        if np.std(X[:, 0]) == 0 or np.std(X[:, 1]) == 0:
            raise TrainingError("训练集的数据量或缓存容量没有变化，无法训练")

        rng = make_rng(cfg.seed)
        self.scaler = training_set.feature_stats()
        Xs = self.scaler.transform(X)
        self.y_mean = float(y.mean())
        std = float(y.std())
        self.y_std = std if std > 0 else 1.0
        t = (y - self.y_mean) / self.y_std

        self.init_params(rng)
        m = {k: np.zeros_like(v) for k, v in self.params.items()}
        v = {k: np.zeros_like(val) for k, val in self.params.items()}
        step = 0
        n_batches = math.ceil(n / cfg.batch_size)
        self.loss_history = []

        for epoch in range(cfg.epochs):
            for idx in np.array_split(rng.permutation(n), n_batches):
                _, grads = self.loss_and_grads(Xs[idx], t[idx], training=True, update_running=True)
                step += 1
                for name, g in grads.items():
                    m[name] = ADAM_BETA1 * m[name] + (1 - ADAM_BETA1) * g
                    v[name] = ADAM_BETA2 * v[name] + (1 - ADAM_BETA2) * g * g
                    m_hat = m[name] / (1 - ADAM_BETA1 ** step)
                    v_hat = v[name] / (1 - ADAM_BETA2 ** step)
                    self.params[name] = self.params[name] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            epoch_loss, _ = self.loss_and_grads(Xs, t, training=False)
            if not math.isfinite(epoch_loss):
                raise TrainingError(f"第 {epoch + 1} 轮训练损失发散")
            self.loss_history.append(epoch_loss)
            if (epoch + 1) % 500 == 0:
                logger.debug(f"[{self.family.value}] epoch {epoch + 1}/{cfg.epochs} loss={epoch_loss:.6f}")

        self.trained = True
        return self

    def _raw_predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = self._forward(self.scaler.transform(X), training=False)
        return out * self.y_std + self.y_mean

    def state(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        meta = {"config": self.config.model_dump(), "y_mean": self.y_mean, "y_std": self.y_std,
                "regularized_layer": "hidden"}
        blocks = {name: self.params[name] for name in self.PARAM_NAMES}
        blocks.update({
            "running_mean": self.running_mean,
            "running_var": self.running_var,
            "x_mean": self.scaler.mean,
            "x_std": self.scaler.std,
            "loss_history": np.asarray(self.loss_history, dtype=np.float64),
        })
        return meta, blocks

    @classmethod
    def from_state(cls, family: Family, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> "FcnModel":
        model = cls(family, validated(FcnConfig, **meta["config"]))
        model.params = {name: blocks[name] for name in cls.PARAM_NAMES}
        model.running_mean = blocks["running_mean"]
        model.running_var = blocks["running_var"]
        model.scaler = Standardizer(mean=blocks["x_mean"], std=blocks["x_std"])
        model.loss_history = blocks["loss_history"].tolist()
        model.y_mean = float(meta["y_mean"])
        model.y_std = float(meta["y_std"])
        model.trained = True
        return model


def rbf_kernel(X1: np.ndarray, X2: np.ndarray, cv: float, ls: float) -> np.ndarray:
    """cv · exp(-‖x - x'‖² / (2·ls²))"""
    sqdist = np.sum(X1 ** 2, 1).reshape(-1, 1) + np.sum(X2 ** 2, 1) - 2 * X1 @ X2.T
    return cv * np.exp(-0.5 / ls ** 2 * np.maximum(sqdist, 0.0))


class GprModel(HitRateModel):
    """高斯过程回归，特征标准化，目标不做归一化"""

    kind = ModelKind.GPR

    def __init__(self, family: Family, cv: float = 1.0, ls: float = 1.0, noise: float = 1e-6):
        super().__init__(family)
        if cv <= 0 or ls <= 0 or noise < 0:
            raise InvalidArgumentError(f"GPR 超参数不合法: cv={cv}, ls={ls}, noise={noise}")
        self.cv, self.ls, self.noise = float(cv), float(ls), float(noise)
        self.scaler: Optional[Standardizer] = None
        self.X_train: Optional[np.ndarray] = None
        self.chol: Optional[np.ndarray] = None
        self.alpha: Optional[np.ndarray] = None

    def fit(self, training_set: TrainingSet) -> "GprModel":
        if len(training_set) == 0:
            raise TrainingError("训练集为空")
        self.scaler = training_set.feature_stats()
        self.X_train = self.scaler.transform(training_set.X)
        K = rbf_kernel(self.X_train, self.X_train, self.cv, self.ls)
        K[np.diag_indices_from(K)] += self.noise
        try:
            self.chol, _ = linalg.cho_factor(K, lower=True)
        except (linalg.LinAlgError, ValueError) as e:
            raise NumericError(f"核矩阵非正定 (cv={self.cv}, ls={self.ls}, noise={self.noise}): {e}")
        self.alpha = linalg.cho_solve((self.chol, True), training_set.y)
        self.trained = True
        return self

    def _raw_predict(self, X: np.ndarray) -> np.ndarray:
        K_s = rbf_kernel(self.scaler.transform(X), self.X_train, self.cv, self.ls)
        return K_s @ self.alpha

    def state(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        meta = {"cv": self.cv, "ls": self.ls, "noise": self.noise}
        blocks = {"x_mean": self.scaler.mean, "x_std": self.scaler.std, "X_train": self.X_train,
                  "chol": self.chol, "alpha": self.alpha}
        return meta, blocks

    @classmethod
    def from_state(cls, family: Family, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> "GprModel":
        model = cls(family, meta["cv"], meta["ls"], meta["noise"])
        model.scaler = Standardizer(mean=blocks["x_mean"], std=blocks["x_std"])
        model.X_train = blocks["X_train"]
        model.chol = blocks["chol"]
        model.alpha = blocks["alpha"]
        model.trained = True
        return model


class LogFitModel(HitRateModel):
    """y = a + b·ln(cache_gb)，与数据量和分布参数无关"""

    kind = ModelKind.LOGFIT

    def __init__(self, family: Family, a: float = 0.0, b: float = 0.0):
        super().__init__(family)
        self.a, self.b = float(a), float(b)

    def fit_points(self, cache_gb: Sequence[float], hit_pct: Sequence[float]) -> "LogFitModel":
        x = np.asarray(cache_gb, dtype=np.float64)
        y = np.asarray(hit_pct, dtype=np.float64)
        if x.shape != y.shape:
            raise InvalidArgumentError("缓存容量与命中率的数量不一致")
        if np.any(x <= 0):
            raise InvalidArgumentError("缓存容量必须大于0")
        if np.unique(x).size < 2:
            raise InvalidArgumentError("对数拟合至少需要两个不同的缓存容量")
        A = np.column_stack([np.ones_like(x), np.log(x)])
        (self.a, self.b), *_ = np.linalg.lstsq(A, y, rcond=None)
        self.a, self.b = float(self.a), float(self.b)
        self.trained = True
        return self

    def _raw_predict(self, X: np.ndarray) -> np.ndarray:
        return self.a + self.b * np.log(X[:, 1])

    def state(self) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        return {}, {"coef": np.array([self.a, self.b])}

    @classmethod
    def from_state(cls, family: Family, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> "LogFitModel":
        a, b = blocks["coef"].tolist()
        model = cls(family, a, b)
        model.trained = True
        return model


MODEL_CLASSES = {ModelKind.FCN: FcnModel, ModelKind.GPR: GprModel, ModelKind.LOGFIT: LogFitModel}


def train_fcn(training_set: TrainingSet, fcn_config: Optional[FcnConfig] = None) -> FcnModel:
    model = FcnModel(training_set.family, fcn_config)
    logger.info(f"训练 FCN ({training_set.family.value}): {len(training_set)} 行, {model.config.model_dump()}")
    return model.fit(training_set)


def train_gpr(training_set: TrainingSet, cv: float, ls: float, noise: float = 1e-6) -> GprModel:
    logger.info(f"训练 GPR ({training_set.family.value}): cv={cv}, ls={ls}, noise={noise}")
    return GprModel(training_set.family, cv, ls, noise).fit(training_set)


def fit_log(points: Sequence[Tuple[float, float]], family: Family = Family.UNIFORM) -> LogFitModel:
    """由 (缓存容量, 命中率) 点列拟合对数曲线"""
    points = list(points)
    if not points:
        raise InvalidArgumentError("对数拟合的点列为空")
    xs, ys = zip(*points)
    return LogFitModel(family).fit_points(xs, ys)


def train_logfit(training_set: TrainingSet) -> LogFitModel:
    return LogFitModel(training_set.family).fit_points(training_set.X[:, 1], training_set.y)


def train_model(kind: ModelKind, training_set: TrainingSet, fcn_config: Optional[FcnConfig] = None,
                gpr_settings: Optional[Dict[str, float]] = None) -> HitRateModel:
    """按模型类型训练，未给出的超参数取全局配置中该分布族的默认值"""
    family = training_set.family
    kind = ModelKind(kind)
    if kind == ModelKind.FCN:
        fcn_config = fcn_config or validated(FcnConfig, **config.get_fcn_settings(family.value))
        return train_fcn(training_set, fcn_config)
    if kind == ModelKind.GPR:
        settings = {"cv": 1.0, "ls": 1.0, "noise": 1e-6}
        settings.update(config.get_gpr_settings(family.value))
        settings.update(gpr_settings or {})
        return train_gpr(training_set, settings["cv"], settings["ls"], settings["noise"])
    return train_logfit(training_set)


def predict(model: HitRateModel, x: FeatureVector) -> float:
    return model.predict(x)


def evaluate(model: HitRateModel, test_set: TrainingSet,
             training_grid: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> float:
    """测试集上的均方误差；测试集中的 (数据量, 参数) 不能出现在训练网格中"""
    if test_set.family != model.family:
        raise InvalidArgumentError(f"测试集分布族 {test_set.family.value} 与模型 {model.family.value} 不一致")
    if len(test_set) == 0:
        raise InvalidArgumentError("测试集为空")
    if training_grid is not None:
        train_pairs = {(float(d), float(p)) for d in training_grid[0] for p in training_grid[1]}
        overlap = [pair for pair in test_set.pairs() if pair in train_pairs]
        if overlap:
            raise InvalidArgumentError(f"测试集与训练网格重叠: {overlap}")
    pred = model.predict_many(test_set.X)
    return float(np.mean((pred - test_set.y) ** 2))


def gpr_sweep(training_set: TrainingSet, test_set: TrainingSet, cvs: Sequence[float] = GPR_SWEEP_VALUES,
              lss: Sequence[float] = GPR_SWEEP_VALUES, noise: float = 1e-6) -> List[Tuple[float, float, float]]:
    """遍历 (cv, ls) 网格，返回 (cv, ls, mse)；核矩阵分解失败的点记为 inf"""
    results = []
    for cv in cvs:
        for ls in lss:
            try:
                mse = evaluate(train_gpr(training_set, cv, ls, noise), test_set)
            except NumericError as e:
                logger.warning(f"GPR cv={cv} ls={ls} 跳过: {e.message}")
                mse = float("inf")
            results.append((float(cv), float(ls), mse))
    return results


def fcn_sweep(training_set: TrainingSet, test_set: TrainingSet, base: Optional[FcnConfig] = None,
              neurons: Sequence[int] = FCN_SWEEP_NEURONS,
              epochs: Sequence[int] = FCN_SWEEP_EPOCHS) -> List[Tuple[int, int, float]]:
    """遍历 (隐藏层神经元数, 训练轮数)，返回 (neurons, epochs, mse)"""
    base = base or FcnConfig()
    results = []
    for hidden in neurons:
        for n_epochs in epochs:
            cfg = validated(FcnConfig, **{**base.model_dump(), "hidden_neurons": hidden, "epochs": n_epochs})
            results.append((int(hidden), int(n_epochs), evaluate(train_fcn(training_set, cfg), test_set)))
    return results


def write_evaluation_csv(rows: Sequence[Tuple[str, str, float]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(EVALUATION_COLUMNS)
        for family, kind, mse in rows:
            writer.writerow([family, kind, f"{mse:.4f}"])
    return path
