"""
模型文件的二进制编解码（小端）

  magic "CPM1" | u16 版本 | u8 分布族 | u8 模型类型 | u32 元数据长度 | 元数据(JSON)
  u32 参数块数 | 每块: u16 名称长度 | 名称 | u8 维数 | u32×维数 | f8 数据
"""
import json
import logging
import struct
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np

from .errors import FormatError, StateError
from .models import Family
from .predictor import MODEL_CLASSES, HitRateModel, ModelKind

logger = logging.getLogger("cachepilot.model_store")

MODEL_MAGIC = b"CPM1"
MODEL_VERSION = 1

_HEADER = struct.Struct("<4sHBBI")


def save_model(model: HitRateModel, path: Union[str, Path]) -> Path:
    """保存训练好的模型"""
    if not model.trained:
        raise FormatError(f"无法保存未训练的模型: {model.kind.value}/{model.family.value}")
    meta, blocks = model.state()
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")

    parts = [_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, model.family.code, model.kind.code, len(meta_bytes)),
             meta_bytes, struct.pack("<I", len(blocks))]
    for name in sorted(blocks):
        array = np.ascontiguousarray(blocks[name], dtype="<f8")
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(array.tobytes())

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(parts))
    logger.info(f"模型已保存: {path}")
    return path


class _Reader:
    """带越界检查的顺序读取"""

    def __init__(self, raw: bytes, path: Path):
        self.raw = raw
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.raw):
            raise FormatError(f"模型文件被截断: {self.path}")
        chunk = self.raw[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))


def load_model(path: Union[str, Path]) -> HitRateModel:
    """读取模型文件"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FormatError(f"无法读取模型文件 {path}: {e}")

    reader = _Reader(raw, path)
    magic, version, family_code, kind_code, meta_len = reader.unpack(_HEADER.format)
    if magic != MODEL_MAGIC:
        raise FormatError(f"模型文件魔数不符: {path}")
    if version != MODEL_VERSION:
        raise FormatError(f"模型文件版本不匹配: 文件版本 {version}, 支持版本 {MODEL_VERSION}")
    try:
        family = Family.from_code(family_code)
    except Exception:
        raise FormatError(f"模型文件分布族编码未知: {family_code}")
    kind = ModelKind.from_code(kind_code)

    try:
        meta = json.loads(reader.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"模型文件元数据损坏 {path}: {e}")

    (n_blocks,) = reader.unpack("<I")
    blocks: Dict[str, np.ndarray] = {}
    for _ in range(n_blocks):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8", errors="replace")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        data = reader.take(8 * count)
        blocks[name] = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)
    if reader.offset != len(raw):
        raise FormatError(f"模型文件末尾有多余数据: {path}")

    try:
        return MODEL_CLASSES[kind].from_state(family, meta, blocks)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"模型文件缺少参数 {path}: {e}")


def model_path(models_dir: Union[str, Path], family: Family, kind: ModelKind) -> Path:
    """模型文件路径: <目录>/<分布族>.<模型类型>.cpm"""
    return Path(models_dir) / f"{Family(family).value}.{ModelKind(kind).value}.cpm"


def load_models(models_dir: Union[str, Path], kind: ModelKind,
                families: Sequence[Family] = tuple(Family)) -> Dict[Family, HitRateModel]:
    """加载各分布族的模型，缺少的分布族一次性列出"""
    missing = [f.value for f in families if not model_path(models_dir, f, kind).exists()]
    if missing:
        raise StateError(f"缺少 {ModelKind(kind).value} 模型文件 ({models_dir}): {', '.join(missing)}")
    return {Family(f): load_model(model_path(models_dir, f, kind)) for f in families}
