"""
阈值与偏差尺度的可容许性检查

只针对幂律族 r(h) = c·h^β、v_n = n^γ，按指数代数给出各条件的判定与余量。
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from covol_ldp.core.estimate import ThresholdFn
from covol_ldp.core.model import ModelSpec, merged_pieces
from covol_ldp.utils.validators import validate_scale_exponent

logger = logging.getLogger(__name__)

# 指数比较的舍入容差 (β = ½ + γ 的边界情形按通过处理)
EXPONENT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PowerLawRegime:
    """幂律阈值 r(1/n) = c·n^{-β} 与可选的尺度 v_n = n^γ"""

    threshold: ThresholdFn
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.gamma is not None:
            valid, message = validate_scale_exponent(self.gamma)
            if not valid:
                raise ValueError(message)

    @classmethod
    def create(cls, scale: float, beta: float, gamma: Optional[float] = None) -> "PowerLawRegime":
        return cls(ThresholdFn(scale, beta), gamma)

    @property
    def beta(self) -> float:
        return self.threshold.exponent

    def r_at(self, n: int) -> float:
        return self.threshold.at(n)

    def v_at(self, n: int) -> float:
        if self.gamma is None:
            raise ValueError("该区间未设定尺度指数γ")
        return float(n) ** self.gamma


@dataclass
class ConditionCheck:
    """单个条件的判定"""

    name: str
    passed: bool
    margin: Optional[float] = None
    detail: str = ""
    approximation: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": self.margin,
            "detail": self.detail,
            "approximation": self.approximation,
        }


@dataclass
class RegimeReport:
    """一组条件的判定结果"""

    kind: str
    checks: List[ConditionCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def get(self, name: str) -> ConditionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _sup_values(model: ModelSpec):
    _, s1, s2, rho = model.diffusion_pieces()
    squeeze = 1.0 - rho**2
    return s1**2 * squeeze, s2**2 * squeeze, s1 * s2 * squeeze


def check_ldp(regime: PowerLawRegime, model: Optional[ModelSpec] = None) -> RegimeReport:
    """大偏差条件

    r(1/n) → 0 ⟺ β > 0；n·r(1/n) → ∞ ⟺ β < 1；log n/(n·r(1/n)) → 0 ⟺ β < 1。
    给定模型时另外报告有界性与连续性条件。
    """
    beta = regime.beta
    report = RegimeReport("ldp")
    report.checks.append(
        ConditionCheck("r_to_zero", beta > 0, beta, f"r(1/n) = c·n^(-{beta:g})")
    )
    report.checks.append(
        ConditionCheck("n_r_to_infinity", beta < 1, 1.0 - beta, f"n·r(1/n) = c·n^{1.0 - beta:g}")
    )
    report.checks.append(
        ConditionCheck(
            "log_n_over_n_r_to_zero",
            beta < 1,
            1.0 - beta,
            f"log n / (n·r(1/n)) = log n / (c·n^{1.0 - beta:g})",
        )
    )

    if model is not None:
        bounds = [float(np.max(values)) for values in _sup_values(model)]
        report.checks.append(
            ConditionCheck(
                "bounded_coefficients",
                all(math.isfinite(b) for b in bounds),
                None,
                "ess sup σ1²(1-ρ²), σ2²(1-ρ²), σ1σ2(1-ρ²) = "
                + ", ".join(f"{b:.6g}" for b in bounds),
            )
        )

        stepped = [
            name
            for name in ("sigma1", "sigma2", "rho")
            if not getattr(model, name).is_constant
        ]
        if stepped:
            report.checks.append(
                ConditionCheck(
                    "continuous_coefficients",
                    True,
                    None,
                    f"{', '.join(stepped)} 为分段常数，连续性条件仅近似成立",
                    approximation=True,
                )
            )
        else:
            report.checks.append(
                ConditionCheck("continuous_coefficients", True, None, "系数为常数")
            )

    logger.debug(f"LDP 条件检查: β={beta}, 通过={report.passed}")
    return report


def check_mdp(regime: PowerLawRegime, model: ModelSpec) -> RegimeReport:
    """中偏差条件 (需要γ)

    v_n → ∞ ⟺ γ > 0；v_n/√n → 0 ⟺ γ < ½；√n·v_n·r(1/n) = c·n^{½+γ-β} = O(1) ⟺ β ≥ ½+γ；
    max_k ∫σ² ≤ ‖σ²‖∞/n 时比值为 Θ(n^{1-β}/log n^{1-2γ}) → ∞ ⟺ β < 1。
    """
    if regime.gamma is None:
        raise ValueError("中偏差检查需要尺度指数γ")

    beta, gamma = regime.beta, regime.gamma
    report = RegimeReport("mdp")
    report.checks.append(
        ConditionCheck("v_to_infinity", gamma > 0, gamma, f"v_n = n^{gamma:g}")
    )
    report.checks.append(
        ConditionCheck(
            "v_over_root_n_to_zero", gamma < 0.5, 0.5 - gamma, f"v_n/√n = n^{gamma - 0.5:g}"
        )
    )

    margin = beta - (0.5 + gamma)
    report.checks.append(
        ConditionCheck(
            "root_n_v_r_bounded",
            margin >= -EXPONENT_TOLERANCE,
            margin,
            f"√n·v_n·r(1/n) = c·n^{0.5 + gamma - beta:g}",
        )
    )

    _, s1, s2 = merged_pieces(model.sigma1, model.sigma2)
    sup_var = max(float(np.max(s1**2)), float(np.max(s2**2)))
    report.checks.append(
        ConditionCheck(
            "r_over_log_max_variance",
            beta < 1,
            1.0 - beta,
            f"max_k ∫σ² ≤ ‖σ²‖∞/n = {sup_var:.6g}/n，比值 = Θ(n^{1.0 - beta:g} / log n^{1.0 - 2.0 * gamma:g})",
        )
    )

    edges = merged_pieces(model.sigma1, model.sigma2, model.rho)[0]
    norms = [
        math.sqrt(math.fsum(np.diff(edges) * values**2)) for values in _sup_values(model)
    ]
    report.checks.append(
        ConditionCheck(
            "square_integrable_coefficients",
            all(math.isfinite(v) for v in norms),
            None,
            "L² 范数 = " + ", ".join(f"{v:.6g}" for v in norms),
        )
    )

    logger.debug(f"MDP 条件检查: β={beta}, γ={gamma}, 未通过={report.failed()}")
    return report


@dataclass
class CorroborationReport:
    """有限样本下对符号判定的核对"""

    n_values: List[int]
    n_r: List[float]
    scaled: Optional[List[float]]
    n_r_increasing: bool
    scaled_bounded: Optional[bool]

    @property
    def passed(self) -> bool:
        return self.n_r_increasing and self.scaled_bounded is not False


def corroborate(regime: PowerLawRegime, n_values: Sequence[int] = (100, 1000, 10000)) -> CorroborationReport:
    """n·r(1/n) 沿 n_values 严格递增；给定γ时 √n·n^γ·r(1/n) 不增 (有界)"""
    n_values = sorted(int(n) for n in n_values)
    if len(n_values) < 2:
        raise ValueError("至少需要两个网格大小")

    n_r = [n * regime.r_at(n) for n in n_values]
    increasing = all(b > a for a, b in zip(n_r[:-1], n_r[1:]))

    scaled = None
    bounded = None
    if regime.gamma is not None:
        scaled = [math.sqrt(n) * regime.v_at(n) * regime.r_at(n) for n in n_values]
        bounded = all(
            b <= a * (1.0 + EXPONENT_TOLERANCE) for a, b in zip(scaled[:-1], scaled[1:])
        )

    return CorroborationReport(n_values, n_r, scaled, increasing, bounded)
