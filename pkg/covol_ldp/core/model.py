"""
二维跳跃扩散模型定义

dX_ℓ = b_ℓ(t) dt + σ_ℓ(t) dW_ℓ + dJ_ℓ，W_2 = ρ W_1 + √(1-ρ²) W_3，
系数为 [0,1] 上的分段常数函数，J_ℓ 为复合泊松过程。
"""

import math
from enum import Enum
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from covol_ldp.utils.validators import (
    validate_breakpoints,
    validate_correlation,
    validate_intensity,
    validate_volatility,
)


JUMP_KEYS = ("intensity", "law", "mean", "stddev", "magnitude", "up_probability", "scale")
MODEL_KEYS = ("sigma1", "sigma2", "rho", "drift1", "drift2", "jumps1", "jumps2", "jump_coupling")


class IntegrandKind(Enum):
    """积分类型枚举"""

    VAR1 = "var1"
    VAR2 = "var2"
    COV = "cov"
    DRIFT1 = "drift1"
    DRIFT2 = "drift2"


class SizeLaw(Enum):
    """跳跃幅度分布枚举"""

    GAUSSIAN = "gaussian"
    FIXED_SIGNED = "fixed_signed"
    LAPLACE = "laplace"


class JumpCoupling(Enum):
    """两条腿跳跃的耦合方式"""

    INDEPENDENT = "independent"
    COMMON_CLOCK = "common_clock"


@dataclass(frozen=True)
class VolVector:
    """(q1, q2, c) 三元组，既用于估计值也用于速率函数的自变量"""

    q1: float = 0.0
    q2: float = 0.0
    c: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.c], dtype=float)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.q1, self.q2, self.c)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "VolVector":
        q1, q2, c = (float(v) for v in values)
        return cls(q1, q2, c)


@dataclass(frozen=True)
class CoefficientFunction:
    """[0,1] 上的右连续分段常数函数"""

    breakpoints: Tuple[float, ...] = (0.0, 1.0)
    values: Tuple[float, ...] = (0.0,)

    def __post_init__(self):
        breakpoints = tuple(float(t) for t in self.breakpoints)
        values = tuple(float(v) for v in self.values)
        valid, message = validate_breakpoints(breakpoints, values)
        if not valid:
            raise ValueError(message)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float) -> "CoefficientFunction":
        return cls((0.0, 1.0), (value,))

    @classmethod
    def from_dict(cls, data: Any) -> "CoefficientFunction":
        """从配置数据创建 (数值、{"value": x} 或 {"breakpoints": [...], "values": [...]})"""
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return cls.constant(float(data))
        if not isinstance(data, dict):
            raise ValueError(f"系数必须是数值或表，实际为 {data!r}")
        if "value" in data:
            _reject_unknown_keys(data, ("value",), "系数")
            return cls.constant(float(data["value"]))
        _reject_unknown_keys(data, ("breakpoints", "values"), "系数")
        return cls(tuple(data["breakpoints"]), tuple(data["values"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def eval(self, t: float) -> float:
        """返回包含t的区间上的取值 (t=1 归入最后一段)"""
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t={t} 不在 [0, 1] 内")
        index = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[min(index, len(self.values) - 1)]


def _reject_unknown_keys(data: Dict[str, Any], known: Iterable[str], where: str) -> None:
    """data 中不得出现 known 以外的字段"""
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValueError(f"{where}包含未知字段: {', '.join(map(str, unknown))}")


def eval_coefficient(f: CoefficientFunction, t: float) -> float:
    """求分段常数函数在t处的取值"""
    return f.eval(t)


@dataclass(frozen=True)
class JumpSpec:
    """复合泊松跳跃设定"""

    intensity: float = 0.0
    law: SizeLaw = SizeLaw.GAUSSIAN
    mean: float = 0.0
    stddev: float = 1.0
    magnitude: float = 1.0
    up_probability: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        valid, message = validate_intensity(self.intensity)
        if not valid:
            raise ValueError(message)
        if self.law == SizeLaw.GAUSSIAN and not self.stddev > 0:
            raise ValueError("高斯跳跃幅度的标准差必须大于0")
        if self.law == SizeLaw.FIXED_SIGNED:
            if not self.magnitude > 0:
                raise ValueError("固定幅度跳跃的幅度必须大于0")
            if not 0.0 <= self.up_probability <= 1.0:
                raise ValueError("向上跳跃概率必须位于 [0, 1]")
        if self.law == SizeLaw.LAPLACE and not self.scale > 0:
            raise ValueError("拉普拉斯跳跃幅度的尺度必须大于0")

    @classmethod
    def none(cls) -> "JumpSpec":
        return cls(intensity=0.0)

    @classmethod
    def gaussian(cls, intensity: float, mean: float = 0.0, stddev: float = 1.0) -> "JumpSpec":
        return cls(intensity=intensity, law=SizeLaw.GAUSSIAN, mean=mean, stddev=stddev)

    @classmethod
    def fixed_signed(cls, intensity: float, magnitude: float, up_probability: float = 0.5) -> "JumpSpec":
        return cls(
            intensity=intensity,
            law=SizeLaw.FIXED_SIGNED,
            magnitude=magnitude,
            up_probability=up_probability,
        )

    @classmethod
    def laplace(cls, intensity: float, scale: float = 1.0) -> "JumpSpec":
        return cls(intensity=intensity, law=SizeLaw.LAPLACE, scale=scale)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "JumpSpec":
        """从配置数据创建跳跃设定"""
        if not data:
            return cls.none()
        if not isinstance(data, dict):
            raise ValueError(f"跳跃设定必须是表，实际为 {data!r}")
        _reject_unknown_keys(data, JUMP_KEYS, "跳跃设定")
        intensity = float(data.get("intensity", 0.0))
        law = SizeLaw(data.get("law", SizeLaw.GAUSSIAN.value))
        if law == SizeLaw.GAUSSIAN:
            return cls.gaussian(
                intensity, float(data.get("mean", 0.0)), float(data.get("stddev", 1.0))
            )
        if law == SizeLaw.FIXED_SIGNED:
            return cls.fixed_signed(
                intensity,
                float(data.get("magnitude", 1.0)),
                float(data.get("up_probability", 0.5)),
            )
        return cls.laplace(intensity, float(data.get("scale", 1.0)))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"intensity": self.intensity, "law": self.law.value}
        if self.law == SizeLaw.GAUSSIAN:
            data.update(mean=self.mean, stddev=self.stddev)
        elif self.law == SizeLaw.FIXED_SIGNED:
            data.update(magnitude=self.magnitude, up_probability=self.up_probability)
        else:
            data.update(scale=self.scale)
        return data

    @property
    def has_jumps(self) -> bool:
        return self.intensity > 0

    def second_moment(self) -> float:
        """跳跃幅度的二阶矩 E[Y²]"""
        if self.law == SizeLaw.GAUSSIAN:
            return self.mean**2 + self.stddev**2
        if self.law == SizeLaw.FIXED_SIGNED:
            return self.magnitude**2
        return 2.0 * self.scale**2

    def sample_sizes(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """抽取count个独立同分布的跳跃幅度"""
        if self.law == SizeLaw.GAUSSIAN:
            return rng.normal(self.mean, self.stddev, size=count)
        if self.law == SizeLaw.FIXED_SIGNED:
            signs = np.where(rng.random(count) < self.up_probability, 1.0, -1.0)
            return self.magnitude * signs
        return rng.laplace(0.0, self.scale, size=count)


@dataclass(frozen=True)
class ModelSpec:
    """完整的二维跳跃扩散模型设定"""

    sigma1: CoefficientFunction = field(default_factory=lambda: CoefficientFunction.constant(1.0))
    sigma2: CoefficientFunction = field(default_factory=lambda: CoefficientFunction.constant(1.0))
    rho: CoefficientFunction = field(default_factory=lambda: CoefficientFunction.constant(0.0))
    drift1: CoefficientFunction = field(default_factory=lambda: CoefficientFunction.constant(0.0))
    drift2: CoefficientFunction = field(default_factory=lambda: CoefficientFunction.constant(0.0))
    jumps1: JumpSpec = field(default_factory=JumpSpec.none)
    jumps2: JumpSpec = field(default_factory=JumpSpec.none)
    jump_coupling: JumpCoupling = JumpCoupling.INDEPENDENT

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            valid, message = validate_volatility(getattr(self, name).values)
            if not valid:
                raise ValueError(f"{name}: {message}")
        valid, message = validate_correlation(self.rho.values)
        if not valid:
            raise ValueError(f"rho: {message}")
        if (
            self.jump_coupling == JumpCoupling.COMMON_CLOCK
            and self.jumps1.intensity != self.jumps2.intensity
        ):
            raise ValueError("共同时钟耦合要求两条腿的跳跃强度相同")

    @classmethod
    def constant(
        cls,
        sigma1: float = 1.0,
        sigma2: float = 1.0,
        rho: float = 0.0,
        drift1: float = 0.0,
        drift2: float = 0.0,
        jumps1: Optional[JumpSpec] = None,
        jumps2: Optional[JumpSpec] = None,
        jump_coupling: JumpCoupling = JumpCoupling.INDEPENDENT,
    ) -> "ModelSpec":
        """常系数模型"""
        return cls(
            sigma1=CoefficientFunction.constant(sigma1),
            sigma2=CoefficientFunction.constant(sigma2),
            rho=CoefficientFunction.constant(rho),
            drift1=CoefficientFunction.constant(drift1),
            drift2=CoefficientFunction.constant(drift2),
            jumps1=jumps1 or JumpSpec.none(),
            jumps2=jumps2 or JumpSpec.none(),
            jump_coupling=jump_coupling,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelSpec":
        """从模型文件内容创建模型"""
        defaults = {"sigma1": 1.0, "sigma2": 1.0, "rho": 0.0, "drift1": 0.0, "drift2": 0.0}
        if not isinstance(data, dict):
            raise ValueError("模型文件顶层必须是表")
        _reject_unknown_keys(data, MODEL_KEYS, "模型文件")
        coefficients = {
            name: CoefficientFunction.from_dict(data.get(name, default))
            for name, default in defaults.items()
        }
        return cls(
            jumps1=JumpSpec.from_dict(data.get("jumps1")),
            jumps2=JumpSpec.from_dict(data.get("jumps2")),
            jump_coupling=JumpCoupling(data.get("jump_coupling", JumpCoupling.INDEPENDENT.value)),
            **coefficients,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "jump_coupling": self.jump_coupling.value,
            "sigma1": self.sigma1.to_dict(),
            "sigma2": self.sigma2.to_dict(),
            "rho": self.rho.to_dict(),
            "drift1": self.drift1.to_dict(),
            "drift2": self.drift2.to_dict(),
            "jumps1": self.jumps1.to_dict(),
            "jumps2": self.jumps2.to_dict(),
        }

    @property
    def has_jumps(self) -> bool:
        return self.jumps1.has_jumps or self.jumps2.has_jumps

    @property
    def is_constant(self) -> bool:
        """扩散系数 (σ1, σ2, ρ) 是否为常数"""
        return self.sigma1.is_constant and self.sigma2.is_constant and self.rho.is_constant

    @property
    def has_drift(self) -> bool:
        return any(v != 0 for v in self.drift1.values + self.drift2.values)

    def diffusion_pieces(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """合并 σ1, σ2, ρ 的断点，返回 (edges, σ1, σ2, ρ) 的逐段取值"""
        return merged_pieces(self.sigma1, self.sigma2, self.rho)

    def integrand(self, kind: IntegrandKind) -> Tuple[np.ndarray, np.ndarray]:
        """返回被积函数的 (edges, 逐段取值)"""
        if kind == IntegrandKind.DRIFT1:
            return merged_pieces(self.drift1)
        if kind == IntegrandKind.DRIFT2:
            return merged_pieces(self.drift2)

        edges, s1, s2, rho = self.diffusion_pieces()
        if kind == IntegrandKind.VAR1:
            return edges, s1 * s1
        if kind == IntegrandKind.VAR2:
            return edges, s2 * s2
        return edges, s1 * s2 * rho


def piece_values(f: CoefficientFunction, points: np.ndarray) -> np.ndarray:
    """向量化求值 (points 应位于区间内部)"""
    index = np.searchsorted(f.breakpoints, points, side="right") - 1
    index = np.clip(index, 0, len(f.values) - 1)
    return np.asarray(f.values, dtype=float)[index]


def merged_pieces(*functions: CoefficientFunction, extra_knots: Sequence[float] = ()):
    """合并若干分段常数函数 (及额外节点) 的断点，返回 (edges, 各函数逐段取值...)"""
    knots = [np.asarray(f.breakpoints, dtype=float) for f in functions]
    knots.append(np.asarray(extra_knots, dtype=float))
    edges = np.unique(np.concatenate(knots))
    midpoints = 0.5 * (edges[:-1] + edges[1:])
    return (edges,) + tuple(piece_values(f, midpoints) for f in functions)


def integrate_product(model: ModelSpec, kind: IntegrandKind, a: float, b: float) -> float:
    """精确计算 ∫_a^b σ1², σ2² 或 σ1σ2ρ (以及漂移项)"""
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError(f"无效的积分区间 [{a}, {b}]")

    edges, values = model.integrand(kind)
    overlaps = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)
    return math.fsum(overlaps * values)


def cumulative_integral(model: ModelSpec, kind: IntegrandKind, grid: np.ndarray) -> np.ndarray:
    """在网格点上求累积积分 ∫_0^t (分段线性，插值精确)"""
    edges, values = model.integrand(kind)
    at_edges = np.concatenate([[0.0], np.cumsum(np.diff(edges) * values)])
    return np.interp(grid, edges, at_edges)


def true_vol_vector(model: ModelSpec, t: float) -> VolVector:
    """积分(协)波动率向量 [V]_t"""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} 不在 [0, 1] 内")

    return VolVector(
        integrate_product(model, IntegrandKind.VAR1, 0.0, t),
        integrate_product(model, IntegrandKind.VAR2, 0.0, t),
        integrate_product(model, IntegrandKind.COV, 0.0, t),
    )
