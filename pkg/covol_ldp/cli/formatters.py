"""
输出格式化工具
"""

import math
from typing import Any, Dict, List, Sequence

from covol_ldp.core.model import VolVector
from covol_ldp.core.regimes import ConditionCheck


def format_value(value: Any, digits: int = 10) -> str:
    """格式化数值用于表格显示 (+∞ 显示为 '+inf')"""
    if isinstance(value, bool):
        return "是" if value else "否"
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return f"{value:.{digits}g}"
    if value is None:
        return "-"
    return str(value)


def format_vector(v: VolVector) -> str:
    return "(" + ", ".join(format_value(x) for x in v.as_tuple()) + ")"


def format_check(check: ConditionCheck, kind: str) -> List[str]:
    """格式化条件判定用于表格显示"""
    verdict = "通过" if check.passed else "未通过"
    if check.approximation:
        verdict += " (近似)"
    return [kind, check.name, verdict, format_value(check.margin), check.detail]


def format_records(records: List[Dict[str, Any]], schema: Sequence[str]) -> List[List[str]]:
    """按列顺序格式化结果记录"""
    return [[format_value(record.get(column)) for column in schema] for record in records]
