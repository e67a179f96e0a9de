"""
已实现(协)变差与阈值估计量
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from covol_ldp.core.model import VolVector
from covol_ldp.core.simulate import JumpTruth, SampledPath
from covol_ldp.utils.validators import validate_threshold

__all__ = [
    "ThresholdFn",
    "VolVector",
    "realized_vector",
    "threshold_vector",
    "full_quadratic_variation",
    "running_estimator",
    "running_sums",
    "truncation_masks",
    "polarized_cross",
    "realized_correlation",
    "realized_beta",
]


@dataclass(frozen=True)
class ThresholdFn:
    """幂律阈值函数 r(h) = c·h^β"""

    scale: float = 1.0
    exponent: float = 0.5

    def __post_init__(self):
        valid, message = validate_threshold(self.scale, self.exponent)
        if not valid:
            raise ValueError(message)

    def r(self, h: float) -> float:
        return self.scale * h**self.exponent

    def at(self, n: int) -> float:
        """步长 1/n 处的阈值 r(1/n)"""
        return self.r(1.0 / n)


def _check_upto(path: SampledPath, upto: int) -> None:
    if not 0 <= upto <= path.n:
        raise ValueError(f"upto={upto} 超出范围 [0, {path.n}]")


def _check_r(r: float) -> None:
    if not r > 0:
        raise ValueError(f"阈值 r 必须大于0 (当前 {r})")


def _prefix(terms: np.ndarray, upto: int) -> float:
    # 所有前缀和都走 cumsum，保证与 running_sums 逐位一致
    if upto == 0:
        return 0.0
    return float(np.cumsum(terms[:upto])[-1])


def truncation_masks(path: SampledPath, r: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (Q1保留, Q2保留, C保留) 的布尔掩码；平方增量等于r时保留"""
    _check_r(r)
    keep1 = path.dx1**2 <= r
    keep2 = path.dx2**2 <= r
    return keep1, keep2, keep1 & keep2


def _threshold_terms(path: SampledPath, r: float) -> np.ndarray:
    keep1, keep2, keep_c = truncation_masks(path, r)
    return np.stack(
        [
            np.where(keep1, path.dx1**2, 0.0),
            np.where(keep2, path.dx2**2, 0.0),
            np.where(keep_c, path.dx1 * path.dx2, 0.0),
        ]
    )


def realized_vector(path: SampledPath, upto: int) -> VolVector:
    """未截断的已实现(协)变差 (ΣΔ1², ΣΔ2², ΣΔ1Δ2)"""
    _check_upto(path, upto)
    return VolVector(
        _prefix(path.dx1**2, upto),
        _prefix(path.dx2**2, upto),
        _prefix(path.dx1 * path.dx2, upto),
    )


def threshold_vector(path: SampledPath, r: float, upto: int) -> VolVector:
    """阈值估计量 (Q1, Q2, C)

    Q_ℓ 仅保留 (Δ X_ℓ)² ≤ r 的项；C 要求两个分量的平方增量都不超过 r。
    """
    _check_r(r)
    _check_upto(path, upto)
    terms = _threshold_terms(path, r)
    return VolVector(*(_prefix(row, upto) for row in terms))


def running_sums(path: SampledPath, r: float) -> np.ndarray:
    """阈值估计量在每个网格点上的取值，形状 (n, 3)"""
    return np.cumsum(_threshold_terms(path, r), axis=1).T


def running_estimator(path: SampledPath, r: float) -> List[VolVector]:
    """过程层面的阈值估计量 V_{t_k}^n, k = 1..n"""
    return [VolVector.from_array(row) for row in running_sums(path, r)]


def full_quadratic_variation(path: SampledPath, truth: JumpTruth) -> VolVector:
    """全二次(协)变差 [X1]_1, [X2]_1, [X1,X2]_1，含共同跳跃"""
    if path.integrated is None:
        raise ValueError("路径缺少积分波动率真值，无法计算全二次变差")

    integrated = path.integrated
    return VolVector(
        integrated.q1 + truth.sum_sq1,
        integrated.q2 + truth.sum_sq2,
        integrated.c + truth.sum_cross,
    )


def polarized_cross(path: SampledPath, upto: int) -> float:
    """极化恒等式给出的交叉项 ½[Σ(Δ1+Δ2)² − ΣΔ1² − ΣΔ2²]"""
    _check_upto(path, upto)
    total = _prefix((path.dx1 + path.dx2) ** 2, upto)
    return 0.5 * (total - _prefix(path.dx1**2, upto) - _prefix(path.dx2**2, upto))


def realized_correlation(v: VolVector) -> float:
    """已实现相关系数 c / √(q1 q2)"""
    if not (v.q1 > 0 and v.q2 > 0):
        raise ValueError("q1 与 q2 必须大于0才能计算相关系数")
    return v.c / math.sqrt(v.q1 * v.q2)


def realized_beta(v: VolVector) -> float:
    """已实现回归系数 c / q1"""
    if not v.q1 > 0:
        raise ValueError("q1 必须大于0才能计算回归系数")
    return v.c / v.q1
