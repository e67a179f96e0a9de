"""
结果输出：CSV 表格、JSON 摘要与运行清单
"""

import os
import json
import logging
import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from covol_ldp import __version__
from covol_ldp.storage.repository import atomic_writer, header_line
from covol_ldp.utils.config import get_setting

logger = logging.getLogger(__name__)

# 各输出类型的列
SCHEMAS = {
    "estimate": ["k", "q1", "q2", "c"],
    "consistency": [
        "n", "reps",
        "threshold_mae_q1", "threshold_mae_q2", "threshold_mae_c",
        "plain_mae_q1", "plain_mae_q2", "plain_mae_c",
    ],
    "clt": ["i", "j", "sample", "reference", "sigma1", "abs_error", "bound", "within"],
    "ldp": [
        "n", "reps", "p_hat", "ci_low", "ci_high", "slope",
        "reference_rate", "gap", "source", "lower_bound_only",
    ],
    "filter": ["leg", "jump_cells", "flagged", "flagged_fraction", "residual_jump_mass", "mean_bias"],
    "mgf": [
        "n", "reps", "theta1", "theta2", "theta3", "estimate", "reference", "stderr", "gap",
        "gamma", "mdp_estimate", "mdp_reference", "mdp_limit",
    ],
    "rate": ["quantity", "value", "iterations", "grad_norm", "status"],
    "regime": ["kind", "name", "passed", "margin", "approximation", "detail"],
}
SCHEMAS["mdp"] = SCHEMAS["ldp"]


def _plain(value: Any) -> Any:
    """numpy 标量/数组转为内置类型"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def write_json(data: Dict[str, Any], destination: str) -> None:
    with atomic_writer(destination) as f:
        json.dump(_plain(data), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def emit_results(
    records: List[Dict[str, Any]],
    schema: Sequence[str],
    destination: str,
    seed: Optional[int] = None,
    summary: Optional[Dict[str, Any]] = None,
) -> Tuple[str, str]:
    """写出 CSV 表格及同名 JSON 摘要，返回两个文件路径

    CSV 首行为版本与种子注释，浮点数保留17位有效数字；JSON 中为相同的数值。
    """
    unknown = sorted({key for record in records for key in record} - set(schema))
    if unknown:
        raise ValueError(f"记录包含未声明的列: {', '.join(unknown)}")

    float_format = get_setting("CSV_FLOAT_FORMAT", "%.17g")
    frame = pd.DataFrame([_plain(record) for record in records], columns=list(schema))

    with atomic_writer(destination) as f:
        f.write(header_line(seed))
        frame.to_csv(f, index=False, float_format=float_format, na_rep="nan", lineterminator="\n")

    json_path = os.path.splitext(destination)[0] + ".json"
    write_json(
        {
            "version": __version__,
            "seed": seed,
            "schema": list(schema),
            "records": records,
            "summary": summary or {},
        },
        json_path,
    )
    logger.info(f"结果已写入: {destination} ({len(records)} 行)")
    return destination, json_path


def write_manifest(
    destination: str,
    command: str,
    config: Dict[str, Any],
    outputs: Sequence[str],
) -> str:
    """运行清单：配置回显、版本号与唯一的时间戳字段"""
    write_json(
        {
            "tool": "covol-ldp",
            "version": __version__,
            "command": command,
            "config": config,
            "outputs": [os.path.basename(p) for p in outputs],
            "timestamp": datetime.datetime.now().isoformat(),
        },
        destination,
    )
    return destination


class ResultWriter:
    """一次运行的输出目录"""

    def __init__(self, output_dir: Optional[str] = None, seed: Optional[int] = None):
        self.output_dir = output_dir or get_setting("OUTPUT_DIR", "results")
        self.seed = seed
        self.outputs: List[str] = []

        # 确保输出目录存在
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)

    def path_for(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def emit(
        self,
        name: str,
        records: List[Dict[str, Any]],
        schema_name: str,
        summary: Optional[Dict[str, Any]] = None,
    ) -> str:
        csv_path, json_path = emit_results(
            records, SCHEMAS[schema_name], self.path_for(f"{name}.csv"), self.seed, summary
        )
        self.outputs.extend([csv_path, json_path])
        return csv_path

    def register(self, path: str) -> None:
        self.outputs.append(path)

    def finish(self, command: str, config: Dict[str, Any]) -> str:
        return write_manifest(self.path_for(f"{command}_manifest.json"), command, config, self.outputs)
