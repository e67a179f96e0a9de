#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
covol-ldp 命令行入口，用法见 `python -m covol_ldp --help`
"""

import sys
import logging

from covol_ldp.cli.commands import parse_and_dispatch
from covol_ldp.utils.logger import setup_logger

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    setup_logger()
    args = sys.argv[1:] if argv is None else argv

    try:
        return parse_and_dispatch(args)
    except KeyboardInterrupt:
        logger.info("运行被用户中断")
        print("\n已中断")
        return 130
    except Exception as e:
        logger.exception(f"未处理的异常: {args}")
        print(f"错误: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
