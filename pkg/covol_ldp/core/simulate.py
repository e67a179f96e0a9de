"""
路径模拟

在均匀网格 t_k = k/n 上精确抽取 (X1, X2) 的增量，并保留
扩散/漂移/跳跃分解作为真值。
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from covol_ldp.core.model import (
    IntegrandKind,
    JumpCoupling,
    ModelSpec,
    VolVector,
    cumulative_integral,
    true_vol_vector,
)
from covol_ldp.utils.validators import validate_grid_size, validate_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampledPath:
    """一条模拟路径的网格增量及其分解"""

    n: int
    dx1: np.ndarray
    dx2: np.ndarray
    dd1: np.ndarray
    dd2: np.ndarray
    db1: np.ndarray
    db2: np.ndarray
    dj1: np.ndarray
    dj2: np.ndarray
    jump_counts1: np.ndarray
    jump_counts2: np.ndarray
    seed: int = 0
    integrated: Optional[VolVector] = None  # 模拟时已知的 [V]_1，读入的路径为 None
    decomposed: bool = True  # False 时 dd/db/dj 未知 (为 NaN)，跳跃计数为0

    def __post_init__(self):
        for name in self.array_fields():
            values = getattr(self, name)
            if len(values) != self.n:
                raise ValueError(f"{name} 的长度 ({len(values)}) 与网格大小 n={self.n} 不一致")
            values.setflags(write=False)

    @staticmethod
    def array_fields() -> Tuple[str, ...]:
        return (
            "dx1", "dx2", "dd1", "dd2", "db1", "db2", "dj1", "dj2",
            "jump_counts1", "jump_counts2",
        )

    @classmethod
    def from_increments(
        cls, dx1: np.ndarray, dx2: np.ndarray, seed: int = 0
    ) -> "SampledPath":
        """只有观测增量时构造路径，分解部分标记为未知"""
        dx1 = np.array(dx1, dtype=float)
        dx2 = np.array(dx2, dtype=float)
        n = len(dx1)
        unknown = {name: np.full(n, np.nan) for name in ("dd1", "dd2", "db1", "db2", "dj1", "dj2")}
        return cls(
            n=n,
            dx1=dx1,
            dx2=dx2,
            jump_counts1=np.zeros(n, dtype=np.int64),
            jump_counts2=np.zeros(n, dtype=np.int64),
            seed=seed,
            decomposed=False,
            **unknown,
        )


@dataclass(frozen=True)
class JumpTruth:
    """跳跃部分对二次变差的贡献"""

    sum_sq1: float = 0.0
    sum_sq2: float = 0.0
    sum_cross: float = 0.0


def derive_subseed(master: int, path_index: int) -> int:
    """由 (主种子, 路径编号) 派生子种子

    使用 numpy SeedSequence([master, path_index]) 的第一个64位状态字，
    路径i的随机性与并行调度无关。
    """
    valid, message = validate_seed(master)
    if not valid:
        raise ValueError(message)
    if path_index < 0:
        raise ValueError("路径编号必须非负")

    sequence = np.random.SeedSequence([int(master), int(path_index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _cell_integrals(model: ModelSpec, kind: IntegrandKind, grid: np.ndarray) -> np.ndarray:
    return np.diff(cumulative_integral(model, kind, grid))


def _diffusion_increments(
    model: ModelSpec, grid: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """按每格精确协方差抽取二维正态增量"""
    n = len(grid) - 1
    var1 = np.clip(_cell_integrals(model, IntegrandKind.VAR1, grid), 0.0, None)
    var2 = np.clip(_cell_integrals(model, IntegrandKind.VAR2, grid), 0.0, None)
    cov = _cell_integrals(model, IntegrandKind.COV, grid)

    z = rng.standard_normal((2, n))
    scale1 = np.sqrt(var1)
    loading = np.divide(cov, scale1, out=np.zeros(n), where=scale1 > 0)
    residual = np.sqrt(np.clip(var2 - loading**2, 0.0, None))

    return scale1 * z[0], loading * z[0] + residual * z[1]


def _jump_increments(
    model: ModelSpec, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, JumpTruth]:
    """抽取每格跳跃次数与跳跃和"""
    counts1 = rng.poisson(model.jumps1.intensity / n, size=n)
    if model.jump_coupling == JumpCoupling.COMMON_CLOCK:
        counts2 = counts1.copy()
    else:
        counts2 = rng.poisson(model.jumps2.intensity / n, size=n)

    sizes1 = model.jumps1.sample_sizes(rng, int(counts1.sum()))
    sizes2 = model.jumps2.sample_sizes(rng, int(counts2.sum()))

    cells = np.arange(n)
    dj1 = np.bincount(np.repeat(cells, counts1), weights=sizes1, minlength=n).astype(float)
    dj2 = np.bincount(np.repeat(cells, counts2), weights=sizes2, minlength=n).astype(float)

    # 共同时钟下第i次跳跃在两条腿上同时发生
    cross = float(np.dot(sizes1, sizes2)) if model.jump_coupling == JumpCoupling.COMMON_CLOCK else 0.0
    truth = JumpTruth(
        sum_sq1=float(np.dot(sizes1, sizes1)),
        sum_sq2=float(np.dot(sizes2, sizes2)),
        sum_cross=cross,
    )
    return counts1, counts2, dj1, dj2, truth


def simulate_path(model: ModelSpec, n: int, seed: int) -> Tuple[SampledPath, JumpTruth]:
    """模拟一条路径，给定 (model, n, seed) 时结果完全确定"""
    valid, message = validate_grid_size(n)
    if not valid:
        raise ValueError(message)
    valid, message = validate_seed(seed)
    if not valid:
        raise ValueError(message)
    n, seed = int(n), int(seed)

    rng = np.random.default_rng(seed)
    grid = np.arange(n + 1) / n

    dd1, dd2 = _diffusion_increments(model, grid, rng)
    db1 = _cell_integrals(model, IntegrandKind.DRIFT1, grid)
    db2 = _cell_integrals(model, IntegrandKind.DRIFT2, grid)
    counts1, counts2, dj1, dj2, truth = _jump_increments(model, n, rng)

    path = SampledPath(
        n=n,
        dx1=dd1 + db1 + dj1,
        dx2=dd2 + db2 + dj2,
        dd1=dd1,
        dd2=dd2,
        db1=db1,
        db2=db2,
        dj1=dj1,
        dj2=dj2,
        jump_counts1=counts1,
        jump_counts2=counts2,
        seed=seed,
        integrated=true_vol_vector(model, 1.0),
    )
    logger.debug(
        f"模拟完成: n={n}, seed={seed}, 跳跃数=({int(counts1.sum())}, {int(counts2.sum())})"
    )
    return path, truth
