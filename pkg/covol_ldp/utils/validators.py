"""
数据验证工具
"""

import math
import numbers
from typing import Any, Sequence, Tuple

MAX_SEED = 2**64 - 1


def is_integer(value: Any) -> bool:
    """int 与 numpy 整数均可，bool 除外"""
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def validate_breakpoints(breakpoints: Sequence[float], values: Sequence[float]) -> Tuple[bool, str]:
    """验证分段常数函数的断点与取值是否有效"""
    if len(breakpoints) < 2:
        return False, "断点至少需要两个 (0 和 1)"

    if len(values) != len(breakpoints) - 1:
        return False, f"取值个数 ({len(values)}) 必须等于区间个数 ({len(breakpoints) - 1})"

    if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
        return False, "第一个断点必须为0，最后一个断点必须为1"

    for left, right in zip(breakpoints[:-1], breakpoints[1:]):
        if not right > left:
            return False, "断点必须严格递增"

    if not all(math.isfinite(v) for v in values):
        return False, "取值必须为有限实数"

    return True, "分段函数有效"


def validate_volatility(values: Sequence[float]) -> Tuple[bool, str]:
    """验证波动率取值"""
    if any(v < 0 for v in values):
        return False, "波动率必须非负"

    return True, "波动率有效"


def validate_correlation(values: Sequence[float]) -> Tuple[bool, str]:
    """验证相关系数取值 (严格位于 (-1, 1))"""
    if any(not -1.0 < v < 1.0 for v in values):
        return False, "相关系数的绝对值必须严格小于1"

    return True, "相关系数有效"


def validate_intensity(intensity: float) -> Tuple[bool, str]:
    """验证跳跃强度"""
    if not math.isfinite(intensity) or intensity < 0:
        return False, "跳跃强度必须为非负有限实数"

    return True, "跳跃强度有效"


def validate_threshold(scale: float, exponent: float) -> Tuple[bool, str]:
    """验证幂律阈值 r(h) = c·h^β 的参数"""
    if not scale > 0:
        return False, "阈值系数c必须大于0"

    if not 0.0 < exponent < 1.0:
        return False, "阈值指数β必须位于 (0, 1)"

    return True, "阈值参数有效"


def validate_scale_exponent(gamma: float) -> Tuple[bool, str]:
    """验证偏差尺度 v_n = n^γ 的指数"""
    if not 0.0 < gamma < 0.5:
        return False, "尺度指数γ必须位于 (0, 1/2)"

    return True, "尺度指数有效"


def validate_grid_size(n: int) -> Tuple[bool, str]:
    """验证网格大小"""
    if not is_integer(n) or n < 1:
        return False, "网格大小n必须为正整数"

    return True, "网格大小有效"


def validate_seed(seed: int) -> Tuple[bool, str]:
    """验证随机种子 (64位无符号整数)"""
    if not is_integer(seed):
        return False, "随机种子必须为整数"

    if not 0 <= seed <= MAX_SEED:
        return False, "随机种子必须位于 [0, 2^64)"

    return True, "随机种子有效"


def validate_direction(direction: Sequence[float]) -> Tuple[bool, str]:
    """验证事件方向向量"""
    if len(direction) != 3:
        return False, "方向向量必须为三维"

    if not all(math.isfinite(u) for u in direction):
        return False, "方向向量分量必须为有限实数"

    if all(u == 0 for u in direction):
        return False, "方向向量不能为零向量"

    return True, "方向向量有效"
