"""
文件读写：模型文件、路径CSV、路径节点CSV与运行配置
"""

import os
import re
import sys
import json
import logging
import tempfile
from contextlib import contextmanager
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from covol_ldp import __version__
from covol_ldp.core.model import ModelSpec
from covol_ldp.core.rates import PiecewiseLinearPath
from covol_ldp.core.simulate import SampledPath
from covol_ldp.utils.config import get_setting

logger = logging.getLogger(__name__)

PATH_COLUMNS = ["k", "dx1", "dx2", "dd1", "dd2", "db1", "db2", "dj1", "dj2", "jc1", "jc2"]
KNOT_COLUMNS = ["s", "phi1", "phi2", "phi3"]

_HEADER_PATTERN = re.compile(r"^#\s*covol-ldp\s+(\S+)\s+seed=(\d+)")


def header_line(seed: Optional[int]) -> str:
    """所有输出文件的首行注释，记录版本与种子"""
    return f"# covol-ldp {__version__} seed={'' if seed is None else seed}\n"


@contextmanager
def atomic_writer(destination: str):
    """先写入同目录临时文件，成功后再替换目标，避免留下不完整的输出"""
    directory = os.path.dirname(os.path.abspath(destination))
    if not os.path.isdir(directory):
        raise OSError(f"输出目录不存在: {directory}")

    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".covol_ldp_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            yield f
        os.replace(tmp_path, destination)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def _require_file(path: str, kind: str) -> None:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{kind}不存在: {path}")


def load_model(path: str) -> ModelSpec:
    """读取模型文件 (.toml 或 .json)"""
    _require_file(path, "模型文件")

    suffix = os.path.splitext(path)[1].lower()
    try:
        if suffix == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        elif suffix == ".json":
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            raise ValueError(f"不支持的模型文件格式 '{suffix}' (需要 .toml 或 .json)")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ValueError(f"模型文件 {path} 解析失败: {str(e)}")

    try:
        model = ModelSpec.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"模型文件 {path} 内容无效: {str(e)}")

    logger.info(f"已加载模型文件: {path}")
    return model


def path_frame(path: SampledPath) -> pd.DataFrame:
    """路径的表格形式，列顺序固定；分解未知时只含 k, dx1, dx2"""
    if not path.decomposed:
        return pd.DataFrame({"k": np.arange(1, path.n + 1), "dx1": path.dx1, "dx2": path.dx2})
    return pd.DataFrame(
        {
            "k": np.arange(1, path.n + 1),
            "dx1": path.dx1,
            "dx2": path.dx2,
            "dd1": path.dd1,
            "dd2": path.dd2,
            "db1": path.db1,
            "db2": path.db2,
            "dj1": path.dj1,
            "dj2": path.dj2,
            "jc1": path.jump_counts1,
            "jc2": path.jump_counts2,
        },
        columns=PATH_COLUMNS,
    )


def write_path_csv(path: SampledPath, destination: str) -> None:
    """写出路径CSV"""
    float_format = get_setting("CSV_FLOAT_FORMAT", "%.17g")
    with atomic_writer(destination) as f:
        f.write(header_line(path.seed))
        path_frame(path).to_csv(f, index=False, float_format=float_format, lineterminator="\n")
    logger.info(f"路径已写入: {destination} (n={path.n})")


def _read_header_seed(source: str) -> int:
    with open(source, "r", encoding="utf-8") as f:
        first = f.readline()
    match = _HEADER_PATTERN.match(first)
    return int(match.group(2)) if match else 0


def read_path_csv(source: str) -> SampledPath:
    """读取路径CSV；只有 dx1, dx2 两列时视为无分解真值的观测数据"""
    _require_file(source, "路径文件")

    try:
        frame = pd.read_csv(source, comment="#", float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValueError(f"路径文件 {source} 解析失败: {str(e)}")

    missing = [c for c in ("dx1", "dx2") if c not in frame.columns]
    if missing:
        raise ValueError(f"路径文件 {source} 缺少列: {', '.join(missing)}")
    if "k" in frame.columns and not np.array_equal(frame["k"].to_numpy(), np.arange(1, len(frame) + 1)):
        raise ValueError(f"路径文件 {source} 的 k 列必须为 1..n")

    seed = _read_header_seed(source)
    if not all(c in frame.columns for c in PATH_COLUMNS):
        return SampledPath.from_increments(
            frame["dx1"].to_numpy(dtype=float), frame["dx2"].to_numpy(dtype=float), seed
        )

    columns = {c: frame[c].to_numpy(dtype=float) for c in PATH_COLUMNS[1:9]}
    return SampledPath(
        n=len(frame),
        jump_counts1=frame["jc1"].to_numpy(dtype=np.int64),
        jump_counts2=frame["jc2"].to_numpy(dtype=np.int64),
        seed=seed,
        **columns,
    )


def read_knots_csv(source: str) -> PiecewiseLinearPath:
    """读取分段线性路径的节点 (列 s, phi1, phi2, phi3)"""
    _require_file(source, "节点文件")

    frame = pd.read_csv(source, comment="#", float_precision="round_trip")
    missing = [c for c in KNOT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"节点文件 {source} 缺少列: {', '.join(missing)}")

    return PiecewiseLinearPath.from_arrays(
        frame["s"].to_numpy(dtype=float),
        frame[["phi1", "phi2", "phi3"]].to_numpy(dtype=float),
    )


def load_run_config(path: str) -> Dict[str, Any]:
    """读取 JSON 运行配置 (命令行参数优先于其中的取值)"""
    _require_file(path, "运行配置文件")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"运行配置文件 {path} 解析失败: {str(e)}")

    if not isinstance(data, dict):
        raise ValueError(f"运行配置文件 {path} 的顶层必须是对象")
    return data
