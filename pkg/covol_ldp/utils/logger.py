"""
日志工具

终端只显示警告及以上，完整日志按天写入 LOG_DIR 下的滚动文件。
"""

import os
import logging
import datetime
from logging.handlers import RotatingFileHandler

from covol_ldp.utils.config import get_setting

CONSOLE_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# 数值库自身的日志过多
QUIET_LOGGERS = ("numexpr", "scipy", "hypothesis", "statsmodels")


def _log_file_path(log_dir: str) -> str:
    stamp = datetime.date.today().strftime("%Y%m%d")
    return os.path.join(log_dir, f"covol_ldp_{stamp}.log")


def _handler(handler: logging.Handler, level: int, fmt: str) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt))
    return handler


def setup_logger() -> logging.Logger:
    """配置根日志记录器，重复调用不会叠加处理器"""
    level = getattr(logging, str(get_setting("LOG_LEVEL", "INFO")).upper(), logging.INFO)
    root = logging.getLogger()
    root.setLevel(level)

    if not root.handlers:
        log_dir = get_setting("LOG_DIR", "logs")
        os.makedirs(log_dir, exist_ok=True)

        # CSV和表格走标准输出，终端日志不能混进去
        root.addHandler(_handler(logging.StreamHandler(), max(level, logging.WARNING), CONSOLE_FORMAT))
        rotating = RotatingFileHandler(
            _log_file_path(log_dir),
            maxBytes=get_setting("MAX_LOG_SIZE", 10 * 1024 * 1024),
            backupCount=get_setting("LOG_BACKUP_COUNT", 5),
            encoding="utf-8",
        )
        root.addHandler(_handler(rotating, level, FILE_FORMAT))

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    return root
