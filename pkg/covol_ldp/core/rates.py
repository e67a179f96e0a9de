"""
速率函数

P_c 及其定义域 D_c、Legendre 变换 P*_c、累积量函数 Λ、大偏差速率 I_ldp、
中偏差矩阵 Σ₁ 与速率 I_mdp、Σ̄_t 的闭式逆与行列式、路径速率 J_mdp 与
J_ldp 的绝对连续部分，以及半空间事件的收缩原理。

扩展实数用 IEEE 浮点表示，math.inf 即 +∞。
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize

from covol_ldp.core.model import ModelSpec, VolVector, merged_pieces, true_vol_vector
from covol_ldp.utils.config import get_setting
from covol_ldp.utils.validators import validate_direction

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """数值优化在迭代上限内未收敛"""


class SingularMatrixError(ValueError):
    """矩阵奇异或条件数超过上限"""


@dataclass(frozen=True)
class LambdaVec:
    """共轭变量 λ = (λ1, λ2, λ3)"""

    l1: float = 0.0
    l2: float = 0.0
    l3: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.l1, self.l2, self.l3)):
            raise ValueError("λ 的分量必须为有限实数")

    def as_array(self) -> np.ndarray:
        return np.array([self.l1, self.l2, self.l3], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "LambdaVec":
        l1, l2, l3 = (float(v) for v in values)
        return cls(l1, l2, l3)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearPath:
    """[0,1] 上的分段线性路径 φ，φ(0) = 0"""

    knots: Tuple[float, ...]
    values: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        knots = tuple(float(s) for s in self.knots)
        values = tuple(tuple(float(v) for v in row) for row in self.values)
        if len(knots) < 2 or knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("节点必须从0开始、以1结束")
        if any(not b > a for a, b in zip(knots[:-1], knots[1:])):
            raise ValueError("节点必须严格递增")
        if len(values) != len(knots) or any(len(row) != 3 for row in values):
            raise ValueError("每个节点需要一个三维取值")
        if any(v != 0.0 for v in values[0]):
            raise ValueError("路径必须满足 φ(0) = 0")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def linear(cls, slope: Sequence[float]) -> "PiecewiseLinearPath":
        """φ(t) = t·slope"""
        return cls((0.0, 1.0), ((0.0, 0.0, 0.0), tuple(slope)))

    @classmethod
    def from_arrays(cls, knots: Sequence[float], values: np.ndarray) -> "PiecewiseLinearPath":
        return cls(tuple(knots), tuple(tuple(row) for row in np.asarray(values, dtype=float)))

    def slopes(self) -> np.ndarray:
        """每段上的导数 φ̇，形状 (m, 3)"""
        values = np.asarray(self.values, dtype=float)
        return np.diff(values, axis=0) / np.diff(np.asarray(self.knots))[:, None]

    def slopes_at(self, points: np.ndarray) -> np.ndarray:
        index = np.searchsorted(self.knots, points, side="right") - 1
        index = np.clip(index, 0, len(self.knots) - 2)
        return self.slopes()[index]


@dataclass(frozen=True, eq=False)
class RateContext:
    """速率函数求值所需的预计算量"""

    model: ModelSpec
    edges: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    rho: np.ndarray
    sigma1_matrix: np.ndarray
    sigma1_factor: Optional[Tuple[np.ndarray, bool]] = field(default=None, repr=False)

    @classmethod
    def from_model(cls, model: ModelSpec) -> "RateContext":
        edges, s1, s2, rho = model.diffusion_pieces()
        widths = np.diff(edges)
        matrix = np.einsum("k,kij->ij", widths, _sigma_bar_matrices(s1, s2, rho))
        matrix = 0.5 * (matrix + matrix.T)

        factor = None
        try:
            factor = _factorize(matrix)
        except SingularMatrixError:
            logger.debug("Σ₁ 奇异，I_mdp 不可用")

        return cls(
            model=model,
            edges=edges,
            sigma1=s1,
            sigma2=s2,
            rho=rho,
            sigma1_matrix=matrix,
            sigma1_factor=factor,
        )

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def scales(self) -> np.ndarray:
        """每段上 λ 的缩放 (σ1², σ2², σ1σ2)，形状 (k, 3)"""
        return np.stack(
            [self.sigma1**2, self.sigma2**2, self.sigma1 * self.sigma2], axis=1
        )

    @property
    def mean(self) -> np.ndarray:
        """[V]_1 = ∇Λ(0)"""
        return true_vol_vector(self.model, 1.0).as_array()


@dataclass
class LdpSolution:
    """I_ldp 数值求解的结果与诊断信息"""

    value: float
    lam: np.ndarray
    iterations: int
    grad_norm: float
    status: str


@dataclass
class ContractionResult:
    """半空间事件的收缩结果"""

    value: float
    point: Optional[np.ndarray]
    multiplier: float
    status: str


def _check_c(c: float) -> None:
    if not -1.0 < c < 1.0:
        raise ValueError(f"相关参数c必须满足 |c| < 1 (当前 {c})")


def _domain_terms(c: np.ndarray, lam: np.ndarray):
    """逐段计算 D_c 判别量；lam 形状 (k, 3)"""
    s = 1.0 - c**2
    u = 1.0 - 2.0 * lam[:, 0] * s
    v = 1.0 - 2.0 * lam[:, 1] * s
    w = lam[:, 2] * s + c
    g = u * v - w**2
    inside = (u > 0) & (v > 0) & (g > 0)
    return s, u, v, w, g, inside


def in_domain(c: float, lam: LambdaVec) -> bool:
    """λ 是否属于 D_c"""
    _check_c(c)
    *_, inside = _domain_terms(np.array([c]), lam.as_array()[None, :])
    return bool(inside[0])


def p_c(c: float, lam: LambdaVec) -> float:
    """P_c(λ)，D_c 之外为 +∞"""
    _check_c(c)
    s, _, _, _, g, inside = _domain_terms(np.array([c]), lam.as_array()[None, :])
    if not inside[0]:
        return math.inf
    return float(-0.5 * math.log(g[0] / s[0]))


def p_star(c: float, x: VolVector) -> float:
    """P_c 的 Legendre 变换 P*_c(x)"""
    _check_c(c)
    x1, x2, x3 = x.as_tuple()
    det = x1 * x2 - x3**2
    if not (x1 > 0 and x2 > 0 and det > 0):
        return math.inf
    s = 1.0 - c**2
    return 0.5 * math.log(s / det) - 1.0 + (x1 + x2 - 2.0 * c * x3) / (2.0 * s)


def _lambda_pieces(ctx: RateContext, lam: np.ndarray):
    scaled = ctx.scales * lam[None, :]
    return _domain_terms(ctx.rho, scaled)


def _lambda_value(ctx: RateContext, lam: np.ndarray) -> float:
    s, _, _, _, g, inside = _lambda_pieces(ctx, lam)
    widths = ctx.widths
    if not np.all(inside | (widths == 0)):
        return math.inf
    return math.fsum(widths * (-0.5 * np.log(g / s)))


def _lambda_derivatives(ctx: RateContext, lam: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Λ(λ) 及其梯度、Hessian (λ 必须在定义域内)"""
    s, u, v, w, g, inside = _lambda_pieces(ctx, lam)
    widths = ctx.widths
    value = math.fsum(widths * (-0.5 * np.log(g / s)))

    # ∇P = s(v, u, w)/g,  ∇²P = 2 ∇P ∇Pᵀ − ½ ∇²g / g
    q = (s / g)[:, None] * np.stack([v, u, w], axis=1)
    hess_p = 2.0 * np.einsum("ki,kj->kij", q, q)
    hess_p[:, 0, 1] -= 2.0 * s**2 / g
    hess_p[:, 1, 0] -= 2.0 * s**2 / g
    hess_p[:, 2, 2] += s**2 / g

    scales = ctx.scales
    grad = np.einsum("k,ki,ki->i", widths, scales, q)
    hess = np.einsum("k,ki,kij,kj->ij", widths, scales, hess_p, scales)
    return value, grad, hess


def lambda_fn(ctx: RateContext, lam: LambdaVec) -> float:
    """Λ(λ) = ∫ P_ρ(λ1σ1², λ2σ2², λ3σ1σ2) dt，逐段精确求和"""
    return _lambda_value(ctx, lam.as_array())


def clt_covariance(ctx: RateContext) -> np.ndarray:
    """√n(V₁ⁿ − [V]₁) 的渐近协方差 ∇²Λ(0)，等于 2Σ₁"""
    _, _, hess = _lambda_derivatives(ctx, np.zeros(3))
    return 0.5 * (hess + hess.T)


def _in_cone(x: np.ndarray) -> bool:
    return bool(x[0] > 0 and x[1] > 0 and x[0] * x[1] - x[2] ** 2 > 0)


def i_ldp_solve(ctx: RateContext, x: VolVector) -> LdpSolution:
    """数值计算 I_ldp(x) = sup_λ ⟨λ,x⟩ − Λ(λ)

    从 λ = 0 出发做带回溯的阻尼牛顿上升，试探点离开定义域即缩短步长；
    P_c 在 ∂D_c 处发散，起到天然障碍的作用。
    |x − ∇Λ(λ)| < NEWTON_GRAD_TOL (绝对容差) 时停止。
    """
    target = x.as_array()
    if not _in_cone(target):
        return LdpSolution(math.inf, np.full(3, np.nan), 0, math.inf, "infeasible")

    max_iter = get_setting("NEWTON_MAX_ITER", 200)
    tol = get_setting("NEWTON_GRAD_TOL", 1e-8)
    cap = get_setting("DIVERGENCE_CAP", 1e6)

    lam = np.zeros(3)
    grad_norm = math.inf
    for iteration in range(max_iter):
        value, grad_lambda, hess = _lambda_derivatives(ctx, lam)
        objective = float(lam @ target) - value
        grad = target - grad_lambda
        grad_norm = float(np.linalg.norm(grad))

        if grad_norm < tol:
            logger.debug(f"I_ldp 收敛: 迭代 {iteration} 次, |∇| = {grad_norm:.3e}")
            return LdpSolution(max(objective, 0.0), lam, iteration, grad_norm, "converged")

        if objective > cap:
            logger.debug(f"I_ldp 发散: 目标值 {objective:.3e} 超过上限 {cap:.1e}")
            return LdpSolution(math.inf, lam, iteration, grad_norm, "diverged")

        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as e:
            raise ValueError(f"Λ 的 Hessian 奇异，模型退化: {str(e)}")

        decrement = float(grad @ direction)
        step = 1.0
        for _ in range(80):
            trial = lam + step * direction
            trial_value = _lambda_value(ctx, trial)
            if math.isfinite(trial_value):
                trial_objective = float(trial @ target) - trial_value
                # 牛顿减量已在舍入误差量级时，只要求留在定义域内
                if decrement < 1e-12 or trial_objective >= objective + 1e-4 * step * decrement:
                    break
            step *= 0.5
        else:
            raise ConvergenceError(
                f"I_ldp 线搜索失败: 迭代 {iteration}, |∇| = {grad_norm:.3e}"
            )
        lam = trial

    raise ConvergenceError(f"I_ldp 在 {max_iter} 次迭代内未收敛 (|∇| = {grad_norm:.3e})")


def i_ldp(ctx: RateContext, x: VolVector) -> float:
    """大偏差速率函数 I_ldp(x)"""
    return i_ldp_solve(ctx, x).value


def i_ldp_constant(sigma1: float, sigma2: float, rho: float, x: VolVector) -> float:
    """常系数时的闭式速率 P*_ρ(x1/σ1², x2/σ2², x3/(σ1σ2))"""
    if not (sigma1 > 0 and sigma2 > 0):
        raise ValueError("σ1 与 σ2 必须大于0")
    _check_c(rho)
    return p_star(
        rho,
        VolVector(x.q1 / sigma1**2, x.q2 / sigma2**2, x.c / (sigma1 * sigma2)),
    )


def _sigma_bar_matrices(s1: np.ndarray, s2: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """逐段的 Σ̄，形状 (k, 3, 3)"""
    m = np.empty((len(s1), 3, 3))
    m[:, 0, 0] = s1**4
    m[:, 1, 1] = s2**4
    m[:, 0, 1] = m[:, 1, 0] = s1**2 * s2**2 * rho**2
    m[:, 0, 2] = m[:, 2, 0] = s1**3 * s2 * rho
    m[:, 1, 2] = m[:, 2, 1] = s1 * s2**3 * rho
    m[:, 2, 2] = 0.5 * s1**2 * s2**2 * (1.0 + rho**2)
    return m


def sigma_bar(sigma1: float, sigma2: float, rho: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """Σ̄_t 及其闭式逆矩阵与行列式 ½σ1⁶σ2⁶(1−ρ²)³"""
    if not (sigma1 > 0 and sigma2 > 0) or not -1.0 < rho < 1.0:
        raise SingularMatrixError(f"Σ̄ 奇异: σ1={sigma1}, σ2={sigma2}, ρ={rho}")

    matrix = _sigma_bar_matrices(np.array([sigma1]), np.array([sigma2]), np.array([rho]))[0]
    s1, s2 = sigma1, sigma2
    k = 1.0 - rho**2
    det = 0.5 * s1**6 * s2**6 * k**3

    adjugate = np.array(
        [
            [0.5 * s1**2 * s2**6 * k, 0.5 * s1**4 * s2**4 * rho**2 * k, -(s1**3) * s2**5 * rho * k],
            [0.5 * s1**4 * s2**4 * rho**2 * k, 0.5 * s1**6 * s2**2 * k, -(s1**5) * s2**3 * rho * k],
            [-(s1**3) * s2**5 * rho * k, -(s1**5) * s2**3 * rho * k, s1**4 * s2**4 * (1.0 - rho**4)],
        ]
    )
    return matrix, adjugate / det, det


def sigma1_matrix(ctx: RateContext) -> np.ndarray:
    """中偏差矩阵 Σ₁ = ∫ Σ̄_t dt"""
    return ctx.sigma1_matrix.copy()


def _factorize(matrix: np.ndarray):
    limit = get_setting("CONDITION_LIMIT", 1e12)
    if not np.all(np.isfinite(matrix)):
        raise SingularMatrixError("矩阵含非有限元素")
    condition = np.linalg.cond(matrix)
    if not condition < limit:
        raise SingularMatrixError(f"矩阵条件数 {condition:.3e} 超过上限 {limit:.1e}")
    try:
        return linalg.cho_factor(matrix)
    except linalg.LinAlgError as e:
        raise SingularMatrixError(f"矩阵不是正定的: {str(e)}")


def i_mdp(ctx: RateContext, x: VolVector, covariance: Optional[np.ndarray] = None) -> float:
    """中偏差速率 ½⟨x, Σ⁻¹x⟩，默认 Σ = Σ₁；通过 Cholesky 分解求解"""
    if covariance is None:
        if ctx.sigma1_factor is None:
            raise SingularMatrixError("Σ₁ 奇异，无法计算 I_mdp")
        factor = ctx.sigma1_factor
    else:
        factor = _factorize(np.asarray(covariance, dtype=float))

    vector = x.as_array()
    return 0.5 * float(vector @ linalg.cho_solve(factor, vector))


def mdp_scaled_cgf(ctx: RateContext, theta: Sequence[float], n: int, gamma: float) -> float:
    """未截断、无漂移统计量的有限n标度累积量

    (1/v_n²) log E exp(√n v_n ⟨θ, V₁ⁿ − [V]₁⟩) = (n/v_n²) Λ(θ v_n/√n) − (√n/v_n) ⟨θ, [V]₁⟩，
    v_n = n^γ；n → ∞ 时趋于 ½⟨θ, 2Σ₁ θ⟩。
    """
    theta = np.asarray(theta, dtype=float)
    v = float(n) ** gamma
    root_n = math.sqrt(n)
    value = _lambda_value(ctx, theta * v / root_n)
    if not math.isfinite(value):
        return math.inf
    return (n / v**2) * value - (root_n / v) * float(theta @ ctx.mean)


def _path_pieces(ctx: RateContext, phi: PiecewiseLinearPath):
    model = ctx.model
    edges, s1, s2, rho = merged_pieces(
        model.sigma1, model.sigma2, model.rho, extra_knots=phi.knots
    )
    midpoints = 0.5 * (edges[:-1] + edges[1:])
    return np.diff(edges), s1, s2, rho, phi.slopes_at(midpoints)


def j_mdp(ctx: RateContext, phi: PiecewiseLinearPath) -> float:
    """函数型中偏差速率 ∫ ½⟨φ̇, Σ̄_t⁻¹ φ̇⟩ dt"""
    widths, s1, s2, rho, slopes = _path_pieces(ctx, phi)
    terms = []
    for width, a, b, c, slope in zip(widths, s1, s2, rho, slopes):
        _, inverse, _ = sigma_bar(a, b, c)
        terms.append(width * 0.5 * float(slope @ inverse @ slope))
    return math.fsum(terms)


def j_ldp_ac(ctx: RateContext, f: PiecewiseLinearPath) -> float:
    """函数型大偏差速率的绝对连续部分 ∫ P*_ρ(ḟ1/σ1², ḟ2/σ2², ḟ3/(σ1σ2)) dt"""
    widths, s1, s2, rho, slopes = _path_pieces(ctx, f)
    terms = []
    for width, a, b, c, slope in zip(widths, s1, s2, rho, slopes):
        if not (a > 0 and b > 0):
            return math.inf
        term = p_star(c, VolVector(slope[0] / a**2, slope[1] / b**2, slope[2] / (a * b)))
        if not math.isfinite(term):
            return math.inf
        terms.append(width * term)
    return math.fsum(terms)


def contract_solve(ctx: RateContext, direction: Sequence[float], level: float) -> ContractionResult:
    """inf{I_ldp(x) : ⟨u, x⟩ ≥ a}

    通过一维对偶 sup_{t≥0} t·a − Λ(t·u) 求解，由 x* = ∇Λ(t* u) 得到边界上的极小点，
    再用 I_ldp(x*) 核对。
    """
    valid, message = validate_direction(direction)
    if not valid:
        raise ValueError(message)
    u = np.asarray(direction, dtype=float)
    mean = ctx.mean

    if float(u @ mean) >= level:
        return ContractionResult(0.0, mean, 0.0, "mean_feasible")

    def slope_gap(t: float) -> float:
        _, grad, _ = _lambda_derivatives(ctx, t * u)
        return level - float(u @ grad)

    # 寻找 slope_gap 变号的区间 [lo, hi]
    lo, hi = 0.0, 1.0
    bracket = None
    for _ in range(400):
        if not math.isfinite(_lambda_value(ctx, hi * u)):
            mid = 0.5 * (lo + hi)
            if not math.isfinite(_lambda_value(ctx, mid * u)):
                hi = mid
            elif slope_gap(mid) < 0:
                bracket = (lo, mid)
                break
            else:
                lo = mid
        elif slope_gap(hi) < 0:
            bracket = (lo, hi)
            break
        else:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                return ContractionResult(math.inf, None, math.inf, "unbounded")
    if bracket is None:
        raise ConvergenceError("收缩原理: 无法确定对偶变量的区间")

    t_star = optimize.brentq(slope_gap, *bracket, xtol=1e-15, rtol=1e-14, maxiter=500)
    value_dual = t_star * level - _lambda_value(ctx, t_star * u)
    _, point, _ = _lambda_derivatives(ctx, t_star * u)

    primal = i_ldp(ctx, VolVector.from_array(point))
    if abs(primal - value_dual) > 1e-6 * max(1.0, abs(value_dual)):
        raise ConvergenceError(
            f"收缩原理: 对偶值 {value_dual:.12g} 与原问题值 {primal:.12g} 不一致"
        )

    logger.debug(f"收缩完成: t* = {t_star:.12g}, 速率 = {value_dual:.12g}")
    return ContractionResult(max(value_dual, 0.0), point, t_star, "converged")


def contract(ctx: RateContext, direction: Sequence[float], level: float) -> float:
    """半空间事件 {⟨u, x⟩ ≥ a} 的大偏差速率"""
    return contract_solve(ctx, direction, level).value


def contract_mdp(
    ctx: RateContext,
    direction: Sequence[float],
    level: float,
    covariance: Optional[np.ndarray] = None,
) -> float:
    """半空间事件的中偏差速率 a²/(2 uᵀΣu) (a ≤ 0 时为0)"""
    valid, message = validate_direction(direction)
    if not valid:
        raise ValueError(message)
    u = np.asarray(direction, dtype=float)
    matrix = ctx.sigma1_matrix if covariance is None else np.asarray(covariance, dtype=float)

    if level <= 0:
        return 0.0
    spread = float(u @ matrix @ u)
    if not spread > 0:
        raise SingularMatrixError("uᵀΣu = 0，方向上无扩散")
    return level**2 / (2.0 * spread)
