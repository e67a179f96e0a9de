"""
运行时配置

优先级：内置默认值 < JSON配置文件 < COVOL_LDP_* 环境变量 < set_setting
"""

import os
import json
import logging
from typing import Any, Dict, List, Optional

from covol_ldp.config import settings

DEFAULT_CONFIG: Dict[str, Any] = {
    "LOG_DIR": settings.LOG_DIR,
    "LOG_LEVEL": settings.LOG_LEVEL,
    "MAX_LOG_SIZE": settings.MAX_LOG_SIZE,
    "LOG_BACKUP_COUNT": settings.LOG_BACKUP_COUNT,
    "OUTPUT_DIR": settings.OUTPUT_DIR,
    "CSV_FLOAT_FORMAT": settings.CSV_FLOAT_FORMAT,
    "MAX_WORKERS": settings.MAX_WORKERS,
    "MIN_TAIL_REPS": settings.MIN_TAIL_REPS,
    "NEWTON_MAX_ITER": settings.NEWTON_MAX_ITER,
    "NEWTON_GRAD_TOL": settings.NEWTON_GRAD_TOL,
    "DIVERGENCE_CAP": settings.DIVERGENCE_CAP,
    "CONDITION_LIMIT": settings.CONDITION_LIMIT,
    "LDP_GAP_TOLERANCE": settings.LDP_GAP_TOLERANCE,
    "MDP_GAP_TOLERANCE": settings.MDP_GAP_TOLERANCE,
    "CLT_RELATIVE_TOLERANCE": settings.CLT_RELATIVE_TOLERANCE,
    "CLT_OFFDIAG_TOLERANCE": settings.CLT_OFFDIAG_TOLERANCE,
    "FILTER_MIN_FRACTION": settings.FILTER_MIN_FRACTION,
}

ENV_PREFIX = "COVOL_LDP_"

_TRUE_WORDS = ("true", "yes", "1", "y")

# 进程内生效的配置
_config: Dict[str, Any] = dict(DEFAULT_CONFIG)


def _candidate_files() -> List[str]:
    """未显式指定配置文件时依次查找的位置"""
    return [
        "config.json",
        os.path.join(os.path.expanduser("~"), ".covol_ldp", "config.json"),
        "/etc/covol_ldp/config.json",
    ]


def _read_config_file(path: str) -> Dict[str, Any]:
    """读取JSON配置文件，失败时记录错误并返回空字典"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logging.error(f"读取配置文件 {path} 失败: {e}")
        return {}
    if not isinstance(data, dict):
        logging.error(f"配置文件 {path} 顶层必须是对象，已忽略")
        return {}
    logging.info(f"已加载配置文件: {path}")
    return data


def _coerce(raw: str, template: Any) -> Any:
    """按默认值的类型解析环境变量字符串"""
    if isinstance(template, bool):
        return raw.strip().lower() in _TRUE_WORDS
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw


def _environment_overrides() -> Dict[str, Any]:
    overrides = {}
    for key, template in DEFAULT_CONFIG.items():
        raw = os.environ.get(ENV_PREFIX + key)
        if raw is None:
            continue
        try:
            overrides[key] = _coerce(raw, template)
        except ValueError:
            logging.warning(
                f"环境变量 {ENV_PREFIX}{key}={raw!r} 不是合法的 {type(template).__name__}，已忽略"
            )
    return overrides


def load_config(config_file: Optional[str] = None) -> Dict[str, Any]:
    """合并配置文件与环境变量到当前配置"""
    if config_file is None:
        config_file = next((p for p in _candidate_files() if os.path.isfile(p)), None)

    if config_file is not None:
        _config.update(_read_config_file(config_file))

    for key, value in _environment_overrides().items():
        _config[key] = value
        logging.debug(f"环境变量覆盖 {key}={value}")

    return _config


def get_setting(key: str, default: Any = None) -> Any:
    return _config.get(key, default)


def set_setting(key: str, value: Any) -> None:
    _config[key] = value


load_config()
