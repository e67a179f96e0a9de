"""
蒙特卡洛与精确参照验证

一致性、CLT 协方差、跳跃过滤，以及大/中偏差斜率与累积量函数的核对。
每条路径的随机性由 derive_subseed(seed, i) 决定，结果按路径编号汇总，
与并行线程数无关。
"""

import math
import logging
from enum import Enum
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special
from statsmodels.stats.proportion import proportion_confint

from covol_ldp.core.estimate import (
    polarized_cross,
    realized_vector,
    threshold_vector,
)
from covol_ldp.core.model import ModelSpec, VolVector, true_vol_vector
from covol_ldp.core.rates import (
    LambdaVec,
    RateContext,
    clt_covariance,
    contract,
    contract_mdp,
    lambda_fn,
    mdp_scaled_cgf,
)
from covol_ldp.core.regimes import PowerLawRegime, check_mdp
from covol_ldp.core.simulate import JumpTruth, SampledPath, derive_subseed, simulate_path
from covol_ldp.utils.config import get_setting
from covol_ldp.utils.validators import is_integer, validate_direction, validate_scale_exponent

logger = logging.getLogger(__name__)

PathStatistic = Callable[[SampledPath, JumpTruth], Sequence[float]]


class Statistic(Enum):
    """偏差事件所针对的统计量"""

    LDP_LEVEL = "ldp_level"  # V₁ⁿ 本身
    MDP_SCALED = "mdp_scaled"  # √n/v_n·(V₁ⁿ − [V]₁)


@dataclass(frozen=True)
class EventSpec:
    """半空间事件 {⟨u, stat⟩ ≥ a}"""

    statistic: Statistic
    direction: Tuple[float, float, float]
    level: float
    gamma: Optional[float] = None
    polarized: bool = False  # 交叉项改用极化恒等式计算

    def __post_init__(self):
        direction = tuple(float(u) for u in self.direction)
        valid, message = validate_direction(direction)
        if not valid:
            raise ValueError(message)
        object.__setattr__(self, "direction", direction)
        if self.statistic == Statistic.MDP_SCALED:
            if self.gamma is None:
                raise ValueError("中偏差事件需要尺度指数γ")
            valid, message = validate_scale_exponent(self.gamma)
            if not valid:
                raise ValueError(message)

    def speed(self, n: int) -> float:
        """大偏差速度为 n，中偏差速度为 v_n² = n^{2γ}"""
        if self.statistic == Statistic.LDP_LEVEL:
            return float(n)
        return float(n) ** (2.0 * self.gamma)


@dataclass
class TailEstimate:
    """尾概率估计"""

    n: int
    reps: int
    hits: int
    p_hat: float
    ci_low: float
    ci_high: float
    neg_log_over_speed: float
    lower_bound_only: bool = False  # p̂ = 0 时斜率只是下界 (由 ci_high 给出)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "hits": self.hits,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "neg_log_over_speed": self.neg_log_over_speed,
            "lower_bound_only": self.lower_bound_only,
        }


def _check_reps(reps: int) -> None:
    minimum = get_setting("MIN_TAIL_REPS", 1000)
    if reps < minimum:
        raise ValueError(f"重复次数 {reps} 小于下限 {minimum}")


def map_paths(
    model: ModelSpec,
    n: int,
    reps: int,
    seed: int,
    statistic: PathStatistic,
    workers: Optional[int] = None,
) -> np.ndarray:
    """对 reps 条路径求统计量，第i行对应第i条路径"""
    if reps < 1:
        raise ValueError("重复次数必须为正整数")
    if workers is None:
        workers = get_setting("MAX_WORKERS", 4)

    def evaluate(index: int) -> np.ndarray:
        path, truth = simulate_path(model, n, derive_subseed(seed, index))
        return np.asarray(statistic(path, truth), dtype=float)

    if workers <= 1:
        results = [evaluate(i) for i in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(evaluate, range(reps)))

    return np.vstack(results)


def _estimator(path: SampledPath, regime: Optional[PowerLawRegime]) -> VolVector:
    if regime is None:
        return realized_vector(path, path.n)
    return threshold_vector(path, regime.r_at(path.n), path.n)


# ---------------------------------------------------------------- 一致性

@dataclass
class ConsistencyRow:
    n: int
    reps: int
    threshold_error: np.ndarray  # 各分量的平均绝对误差
    plain_error: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "threshold_mae_q1": float(self.threshold_error[0]),
            "threshold_mae_q2": float(self.threshold_error[1]),
            "threshold_mae_c": float(self.threshold_error[2]),
            "plain_mae_q1": float(self.plain_error[0]),
            "plain_mae_q2": float(self.plain_error[1]),
            "plain_mae_c": float(self.plain_error[2]),
        }


@dataclass
class ConsistencyReport:
    rows: List[ConsistencyRow] = field(default_factory=list)

    def to_records(self) -> List[Dict[str, Any]]:
        return [row.to_dict() for row in self.rows]

    def summary(self) -> Dict[str, Any]:
        return {"n_list": [row.n for row in self.rows], "violations": self.violations()}

    def violations(self) -> List[str]:
        errors = [float(row.threshold_error[0]) for row in self.rows]
        if any(b > a for a, b in zip(errors[:-1], errors[1:])):
            return ["阈值估计量 q1 的误差未随n减小"]
        return []


def run_consistency(
    model: ModelSpec,
    regime: Optional[PowerLawRegime],
    n_list: Sequence[int],
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> ConsistencyReport:
    """各n下阈值估计量与普通已实现估计量相对 [V]₁ 的平均绝对误差"""
    if not n_list:
        raise ValueError("n_list 不能为空")

    target = true_vol_vector(model, 1.0).as_array()

    def statistic(path: SampledPath, truth: JumpTruth) -> np.ndarray:
        threshold = _estimator(path, regime).as_array()
        plain = realized_vector(path, path.n).as_array()
        return np.concatenate([np.abs(threshold - target), np.abs(plain - target)])

    logger.info(f"开始一致性实验: n={list(n_list)}, reps={reps}, seed={seed}")
    report = ConsistencyReport()
    for n in n_list:
        errors = map_paths(model, n, reps, seed, statistic, workers).mean(axis=0)
        row = ConsistencyRow(n, reps, errors[:3], errors[3:])
        report.rows.append(row)
        logger.info(
            f"n={n}: 阈值误差 q1={errors[0]:.6g}, 普通误差 q1={errors[3]:.6g}"
        )
    return report


# ---------------------------------------------------------------- CLT

@dataclass
class CltReport:
    """√n(V₁ⁿ − [V]₁) 的样本协方差与渐近协方差 ∇²Λ(0) = 2Σ₁ 的比较"""

    n: int
    reps: int
    sample: np.ndarray
    reference: np.ndarray
    sigma1: np.ndarray

    def _bounds(self) -> np.ndarray:
        relative = get_setting("CLT_RELATIVE_TOLERANCE", 0.10)
        offdiag = get_setting("CLT_OFFDIAG_TOLERANCE", 0.05)
        scale = np.sqrt(np.outer(np.diag(self.reference), np.diag(self.reference)))
        bounds = offdiag * scale
        np.fill_diagonal(bounds, relative * np.diag(self.reference))
        return bounds

    def to_records(self) -> List[Dict[str, Any]]:
        bounds = self._bounds()
        records = []
        for i in range(3):
            for j in range(i, 3):
                error = abs(float(self.sample[i, j] - self.reference[i, j]))
                records.append(
                    {
                        "i": i + 1,
                        "j": j + 1,
                        "sample": float(self.sample[i, j]),
                        "reference": float(self.reference[i, j]),
                        "sigma1": float(self.sigma1[i, j]),
                        "abs_error": error,
                        "bound": float(bounds[i, j]),
                        "within": error <= bounds[i, j],
                    }
                )
        return records

    def summary(self) -> Dict[str, Any]:
        return {"n": self.n, "reps": self.reps, "violations": self.violations()}

    def violations(self) -> List[str]:
        return [
            f"协方差元素 ({record['i']},{record['j']}) 偏差 {record['abs_error']:.4g} 超过 {record['bound']:.4g}"
            for record in self.to_records()
            if not record["within"]
        ]


def run_clt(
    model: ModelSpec,
    regime: Optional[PowerLawRegime],
    n: int,
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> CltReport:
    """√n(V₁ⁿ − [V]₁) 的样本协方差"""
    _check_reps(reps)
    target = true_vol_vector(model, 1.0).as_array()
    root_n = math.sqrt(n)

    def statistic(path: SampledPath, truth: JumpTruth) -> np.ndarray:
        return root_n * (_estimator(path, regime).as_array() - target)

    logger.info(f"开始 CLT 实验: n={n}, reps={reps}, seed={seed}")
    samples = map_paths(model, n, reps, seed, statistic, workers)
    sample = np.cov(samples, rowvar=False)

    ctx = RateContext.from_model(model)
    report = CltReport(n, reps, sample, clt_covariance(ctx), ctx.sigma1_matrix.copy())
    logger.info(f"CLT 实验完成: 样本协方差对角线 {np.diag(sample)}")
    return report


# ---------------------------------------------------------------- 尾概率

def _event_values(
    model: ModelSpec, regime: Optional[PowerLawRegime], event: EventSpec, n: int
) -> PathStatistic:
    direction = np.asarray(event.direction)
    target = true_vol_vector(model, 1.0).as_array()
    if event.polarized and regime is not None:
        raise ValueError("极化交叉项只用于未截断的统计量")

    scale = None
    if event.statistic == Statistic.MDP_SCALED:
        scale = math.sqrt(n) / float(n) ** event.gamma

    def statistic(path: SampledPath, truth: JumpTruth) -> Tuple[float]:
        values = _estimator(path, regime).as_array()
        if event.polarized:
            values[2] = polarized_cross(path, path.n)
        if scale is not None:
            values = scale * (values - target)
        return (float(direction @ values),)

    return statistic


def wilson_interval(hits: int, reps: int) -> Tuple[float, float]:
    """95% Wilson 区间"""
    low, high = proportion_confint(hits, reps, alpha=0.05, method="wilson")
    return max(0.0, float(low)), min(1.0, float(high))


def estimate_tail(
    model: ModelSpec,
    regime: Optional[PowerLawRegime],
    event: EventSpec,
    n: int,
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> TailEstimate:
    """事件频率 p̂、Wilson 区间与 −log p̂ / 速度"""
    _check_reps(reps)
    values = map_paths(model, n, reps, seed, _event_values(model, regime, event, n), workers)
    hits = int(np.count_nonzero(values[:, 0] >= event.level))

    p_hat = hits / reps
    ci_low, ci_high = wilson_interval(hits, reps)
    ci_low, ci_high = min(ci_low, p_hat), max(ci_high, p_hat)
    speed = event.speed(n)

    if hits == 0:
        # 只能给出下界 −log(ci_high) / 速度
        return TailEstimate(n, reps, 0, 0.0, ci_low, ci_high, abs(math.log(ci_high)) / speed, True)

    return TailEstimate(n, reps, hits, p_hat, ci_low, ci_high, abs(math.log(p_hat)) / speed)


def chi2_tail_exact(n: int, a: float, sigma_sq: float) -> float:
    """P(Q₁ⁿ ≥ a)：常系数、无漂移无跳跃未截断时 n·Q₁ⁿ/σ² 服从自由度为n的卡方分布

    由正则化上不完全伽马函数 Q(n/2, n·a/(2σ²)) 计算。
    """
    if not is_integer(n) or n < 1:
        raise ValueError("n 必须为正整数")
    if not a > 0:
        raise ValueError("水平a必须大于0")
    if not sigma_sq > 0:
        raise ValueError("σ² 必须大于0")
    return float(special.gammaincc(n / 2.0, n * a / (2.0 * sigma_sq)))


# ---------------------------------------------------------------- 偏差斜率

@dataclass
class SlopeRow:
    n: int
    reps: int
    p_hat: float
    ci_low: float
    ci_high: float
    slope: float
    reference_rate: float
    gap: float
    source: str
    lower_bound_only: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "slope": self.slope,
            "reference_rate": self.reference_rate,
            "gap": self.gap,
            "source": self.source,
            "lower_bound_only": self.lower_bound_only,
        }


@dataclass
class SlopeReport:
    """各n下 −log P / 速度 与速率函数参照值的差距

    参照值为正时 gap 为相对差距，否则为绝对差距。
    """

    kind: str
    reference_rate: float
    tolerance: float
    rows: List[SlopeRow] = field(default_factory=list)

    @property
    def gaps_shrinking(self) -> bool:
        gaps = [row.gap for row in self.rows]
        return all(b <= a for a, b in zip(gaps[:-1], gaps[1:]))

    def to_records(self) -> List[Dict[str, Any]]:
        return [row.to_dict() for row in self.rows]

    def summary(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "reference_rate": self.reference_rate,
            "tolerance": self.tolerance,
            "gaps_shrinking": self.gaps_shrinking,
            "violations": self.violations(),
        }

    def violations(self) -> List[str]:
        problems = []
        if self.rows and self.rows[-1].gap > self.tolerance:
            last = self.rows[-1]
            problems.append(f"n={last.n} 处差距 {last.gap:.4g} 超过容差 {self.tolerance:.4g}")
        exact = [row for row in self.rows if row.source == "oracle"]
        if len(exact) == len(self.rows) and not self.gaps_shrinking:
            problems.append("精确参照序列的差距未单调缩小")
        return problems


def _gap(slope: float, reference: float) -> float:
    if reference > 0:
        return abs(slope - reference) / reference
    return abs(slope - reference)


def _oracle_level(model: ModelSpec, regime: Optional[PowerLawRegime], event: EventSpec) -> Optional[float]:
    """卡方精确参照适用时返回 Q₁ 的等价水平 a/u1，否则返回 None"""
    u1, u2, u3 = event.direction
    applies = (
        regime is None
        and event.statistic == Statistic.LDP_LEVEL
        and not event.polarized
        and u1 > 0
        and u2 == 0
        and u3 == 0
        and model.sigma1.is_constant
        and model.sigma1.values[0] > 0
        and not model.jumps1.has_jumps
        and all(v == 0 for v in model.drift1.values)
    )
    return event.level / u1 if applies else None


def _slope_row(estimate: TailEstimate, reference: float) -> SlopeRow:
    return SlopeRow(
        n=estimate.n,
        reps=estimate.reps,
        p_hat=estimate.p_hat,
        ci_low=estimate.ci_low,
        ci_high=estimate.ci_high,
        slope=estimate.neg_log_over_speed,
        reference_rate=reference,
        gap=_gap(estimate.neg_log_over_speed, reference),
        source="monte_carlo",
        lower_bound_only=estimate.lower_bound_only,
    )


def ldp_slope(
    model: ModelSpec,
    regime: Optional[PowerLawRegime],
    event: EventSpec,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> SlopeReport:
    """−(1/n)·log P(⟨u, V₁ⁿ⟩ ≥ a) 与收缩速率 inf{I_ldp : ⟨u,x⟩ ≥ a} 的比较

    常系数、无漂移无跳跃、未截断且方向为 (u1>0, 0, 0) 时使用卡方精确参照，否则用蒙特卡洛。
    """
    if event.statistic != Statistic.LDP_LEVEL:
        raise ValueError("ldp_slope 需要 LDP_LEVEL 事件")
    n_grid = list(n_grid)
    if not n_grid or any(b <= a for a, b in zip(n_grid[:-1], n_grid[1:])):
        raise ValueError("n_grid 必须非空且严格递增")

    reference = contract(RateContext.from_model(model), event.direction, event.level)
    report = SlopeReport("ldp", reference, get_setting("LDP_GAP_TOLERANCE", 0.10))
    oracle_level = _oracle_level(model, regime, event)

    logger.info(f"开始 LDP 斜率实验: n={n_grid}, 参照速率={reference:.10g}")
    for n in n_grid:
        if oracle_level is not None:
            sigma_sq = model.sigma1.values[0] ** 2
            p = chi2_tail_exact(n, oracle_level, sigma_sq) if oracle_level > 0 else 1.0
            slope = abs(math.log(p)) / n if p > 0 else math.inf
            row = SlopeRow(n, 0, p, p, p, slope, reference, _gap(slope, reference), "oracle")
        else:
            row = _slope_row(estimate_tail(model, regime, event, n, reps, seed, workers), reference)
        report.rows.append(row)
        logger.info(f"n={n}: 斜率={row.slope:.6g}, 差距={row.gap:.4g} ({row.source})")
    return report


def mdp_slope(
    model: ModelSpec,
    regime: PowerLawRegime,
    event: EventSpec,
    n_grid: Sequence[int],
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> SlopeReport:
    """−log p̂ / v_n² 与二次收缩速率 a²/(2uᵀ(2Σ₁)u) 的比较 (仅蒙特卡洛)"""
    if event.statistic != Statistic.MDP_SCALED:
        raise ValueError("mdp_slope 需要 MDP_SCALED 事件")
    verdict = check_mdp(PowerLawRegime(regime.threshold, event.gamma), model)
    if not verdict.passed:
        raise ValueError(f"区间不满足中偏差条件: {', '.join(verdict.failed())}")

    ctx = RateContext.from_model(model)
    reference = contract_mdp(ctx, event.direction, event.level, covariance=clt_covariance(ctx))
    report = SlopeReport("mdp", reference, get_setting("MDP_GAP_TOLERANCE", 0.35))

    logger.info(f"开始 MDP 斜率实验: n={list(n_grid)}, γ={event.gamma}, 参照速率={reference:.10g}")
    for n in n_grid:
        row = _slope_row(estimate_tail(model, regime, event, n, reps, seed, workers), reference)
        report.rows.append(row)
        logger.info(f"n={n}: 斜率={row.slope:.6g}, 差距={row.gap:.4g}")
    return report


# ---------------------------------------------------------------- 跳跃过滤

@dataclass
class LegFilterRow:
    leg: int
    jump_cells: int
    flagged: int
    residual_jump_mass: float  # 每条路径平均通过阈值的 Σ(ΔJ)²
    mean_bias: float  # 阈值估计量减 [V]₁ 的平均值

    @property
    def flagged_fraction(self) -> float:
        return self.flagged / self.jump_cells if self.jump_cells else math.nan

    def to_dict(self) -> Dict[str, Any]:
        return {
            "leg": self.leg,
            "jump_cells": self.jump_cells,
            "flagged": self.flagged,
            "flagged_fraction": self.flagged_fraction,
            "residual_jump_mass": self.residual_jump_mass,
            "mean_bias": self.mean_bias,
        }


@dataclass
class JumpFilterReport:
    n: int
    reps: int
    r: float
    legs: List[LegFilterRow]

    @property
    def jump_cells(self) -> int:
        return sum(leg.jump_cells for leg in self.legs)

    @property
    def flagged_fraction(self) -> float:
        if not self.jump_cells:
            return math.nan
        return sum(leg.flagged for leg in self.legs) / self.jump_cells

    def to_records(self) -> List[Dict[str, Any]]:
        return [leg.to_dict() for leg in self.legs]

    def summary(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "r": self.r,
            "jump_cells": self.jump_cells,
            "flagged_fraction": self.flagged_fraction,
            "note": "" if self.jump_cells else "没有含跳跃的格子",
            "violations": self.violations(),
        }

    def violations(self) -> List[str]:
        minimum = get_setting("FILTER_MIN_FRACTION", 0.95)
        if self.jump_cells and self.flagged_fraction < minimum:
            return [f"跳跃识别比例 {self.flagged_fraction:.4g} 低于 {minimum:.4g}"]
        return []


def jump_filter_report(
    model: ModelSpec,
    regime: PowerLawRegime,
    n: int,
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> JumpFilterReport:
    """含跳跃的格子中 (ΔX)² > r(1/n) 的比例、残余跳跃质量与估计偏差"""
    if regime is None:
        raise ValueError("跳跃过滤报告需要阈值区间")
    r = regime.r_at(n)
    target = true_vol_vector(model, 1.0).as_array()

    def statistic(path: SampledPath, truth: JumpTruth) -> np.ndarray:
        bias = threshold_vector(path, r, path.n).as_array() - target
        row = []
        for counts, dx, dj, b in (
            (path.jump_counts1, path.dx1, path.dj1, bias[0]),
            (path.jump_counts2, path.dx2, path.dj2, bias[1]),
        ):
            cells = counts > 0
            flagged = cells & (dx**2 > r)
            residual = float(np.sum(dj[cells & ~flagged] ** 2))
            row.extend([np.count_nonzero(cells), np.count_nonzero(flagged), residual, b])
        return row

    logger.info(f"开始跳跃过滤实验: n={n}, r={r:.6g}, reps={reps}")
    values = map_paths(model, n, reps, seed, statistic, workers)
    totals = values.sum(axis=0)
    means = values.mean(axis=0)

    legs = [
        LegFilterRow(1, int(totals[0]), int(totals[1]), float(means[2]), float(means[3])),
        LegFilterRow(2, int(totals[4]), int(totals[5]), float(means[6]), float(means[7])),
    ]
    report = JumpFilterReport(n, reps, r, legs)
    logger.info(f"跳跃过滤完成: 含跳跃格 {report.jump_cells}, 识别比例 {report.flagged_fraction:.4g}")
    return report


# ---------------------------------------------------------------- 累积量函数

@dataclass
class CgfReport:
    """(1/n)·log E exp(n⟨θ, V₁ⁿ⟩) 的蒙特卡洛估计与 Λ(θ) 的比较

    给定 γ 时同一批样本还换算为中偏差标度累积量
    (1/v_n²) log E exp(√n v_n⟨η, V₁ⁿ − [V]₁⟩)，η = θ√n/v_n，
    并与有限n精确值及极限 ½⟨η, 2Σ₁η⟩ 比较。
    """

    n: int
    reps: int
    theta: Tuple[float, float, float]
    estimate: float
    reference: float
    stderr: float
    gamma: Optional[float] = None
    mdp_estimate: float = math.nan
    mdp_reference: float = math.nan
    mdp_limit: float = math.nan

    @property
    def gap(self) -> float:
        return self.estimate - self.reference

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {
                "n": self.n,
                "reps": self.reps,
                "theta1": self.theta[0],
                "theta2": self.theta[1],
                "theta3": self.theta[2],
                "estimate": self.estimate,
                "reference": self.reference,
                "stderr": self.stderr,
                "gap": self.gap,
                "gamma": self.gamma,
                "mdp_estimate": self.mdp_estimate,
                "mdp_reference": self.mdp_reference,
                "mdp_limit": self.mdp_limit,
            }
        ]

    def summary(self) -> Dict[str, Any]:
        return {"n": self.n, "reps": self.reps, "gamma": self.gamma, "violations": self.violations()}

    def violations(self) -> List[str]:
        if abs(self.gap) > 4.0 * self.stderr:
            return [f"累积量估计偏差 {self.gap:.4g} 超过4倍标准误 {self.stderr:.4g}"]
        return []


def run_cgf(
    model: ModelSpec,
    theta: Sequence[float],
    n: int,
    reps: int,
    seed: int,
    workers: Optional[int] = None,
    gamma: Optional[float] = None,
) -> CgfReport:
    """未截断统计量的有限n累积量函数

    系数与网格对齐、无漂移无跳跃时参照值 Λ(θ) 精确成立。
    """
    _check_reps(reps)
    theta = tuple(float(v) for v in theta)
    ctx = RateContext.from_model(model)
    reference = lambda_fn(ctx, LambdaVec(*theta))
    if not math.isfinite(reference):
        raise ValueError(f"θ={theta} 不在 Λ 的有效定义域内")
    if gamma is not None:
        valid, message = validate_scale_exponent(gamma)
        if not valid:
            raise ValueError(message)
    if model.has_jumps or model.has_drift:
        logger.warning("模型含跳跃或漂移，Λ(θ) 只是极限参照")

    direction = np.asarray(theta)

    def statistic(path: SampledPath, truth: JumpTruth) -> Tuple[float]:
        return (n * float(direction @ realized_vector(path, path.n).as_array()),)

    exponents = map_paths(model, n, reps, seed, statistic, workers)[:, 0]
    log_mean = float(special.logsumexp(exponents)) - math.log(reps)

    # delta 方法: sd(log m̂) ≈ sd(e^x) / (m √reps)
    weights = np.exp(exponents - exponents.max())
    stderr = float(np.std(weights, ddof=1) / np.mean(weights)) / math.sqrt(reps) / n

    report = CgfReport(n, reps, theta, log_mean / n, reference, stderr)
    if gamma is not None:
        v = float(n) ** gamma
        eta = direction * math.sqrt(n) / v
        report.gamma = gamma
        report.mdp_estimate = log_mean / v**2 - math.sqrt(n) / v * float(eta @ ctx.mean)
        report.mdp_reference = mdp_scaled_cgf(ctx, eta, n, gamma)
        report.mdp_limit = 0.5 * float(eta @ clt_covariance(ctx) @ eta)
    logger.info(f"累积量实验完成: 估计={report.estimate:.6g}, Λ(θ)={reference:.6g}")
    return report
