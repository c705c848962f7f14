"""
超矩形到超椭球的细化

对每个 (alpha, lambda) 网格单元求一次线性规划，在全数据集上重新
统计成员，最后保留 (mass, impurity) 意义下的 Pareto 前沿。

线性规划先只带邻域内的正常点；解出的椭球若还包住了邻域外的正常点，
就把这些点（由近及远）加入约束重新求解，直到没有遗漏。结果与带全部
正常点的线性规划一致
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..dataset import LabeledDataset
from ..density import Interval
from ..errors import EmptyEllipsoidError, SolverError
from ..lattice import HyperRectangle, containment_mask
from .base import BoundaryFit, Pack, Provenance
from .ellipsoid import make_pack
from .solver import COEF_BOUND, fit_boundary

DEFAULT_ALPHA_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)

# 正常点 h(x) > -1 + VIOLATION_TOLERANCE 视为违反约束
VIOLATION_TOLERANCE = 1e-7
# 每轮至少加入的正常点数
MIN_BATCH = 32


@dataclass(frozen=True, eq=False)
class Vicinity:
    """细化时使用的局部点集（ID）"""
    inside_anomalies: np.ndarray
    near_anomalies: np.ndarray
    near_normals: np.ndarray


def filter_vicinity(
    rect: HyperRectangle,
    dataset: LabeledDataset,
    margin: float = 1.0
) -> Vicinity:
    """
    按扩展后的矩形筛选邻域点

    每条边向两侧各扩展 margin × 边宽（裁剪到 [0, 1]）。
    x_i: 矩形内异常点；x_j: 扩展框内、矩形外的异常点；x_l: 扩展框内全部正常点

    Args:
        rect: 超矩形
        dataset: 归一化后的数据集
        margin: 扩展倍数 (>= 0)

    Returns:
        邻域点 ID
    """
    if margin < 0:
        raise ValueError(f"margin 必须 >= 0: {margin}")

    expanded = tuple(
        (f, Interval(max(0.0, s.lb - margin * s.width), min(1.0, s.ub + margin * s.width)))
        for f, s in rect.sides
    )
    inside = containment_mask(rect.sides, dataset.points)
    near = containment_mask(expanded, dataset.points)
    anomalous = dataset.is_anomaly
    return Vicinity(
        inside_anomalies=np.flatnonzero(inside & anomalous),
        near_anomalies=np.flatnonzero(near & ~inside & anomalous),
        near_normals=np.flatnonzero(near & ~anomalous),
    )


def pareto_frontier(packs: Sequence[Pack]) -> List[Pack]:
    """
    保留不被严格支配的 pack

    p' 支配 p 当且仅当 mass(p') >= mass(p)、impurity(p') <= impurity(p)
    且至少一项严格；(mass, impurity) 完全相同的只保留第一个

    Args:
        packs: 按来源顺序排列的 pack

    Returns:
        Pareto 前沿，保持输入顺序
    """
    if not packs:
        return []
    masses = np.array([p.mass for p in packs])
    impurities = np.array([p.impurity for p in packs])

    frontier = []
    kept = set()
    for p, mass, impurity in zip(packs, masses, impurities):
        dominated = np.any(
            (masses >= mass) & (impurities <= impurity)
            & ((masses > mass) | (impurities < impurity))
        )
        if dominated or (mass, impurity) in kept:
            continue
        kept.add((mass, impurity))
        frontier.append(p)
    return frontier


@dataclass
class RefinementOutcome:
    """单个超矩形的细化结果"""
    packs: List[Pack] = field(default_factory=list)
    cells: int = 0
    solver_failures: int = 0
    empty_cells: int = 0
    impure_cells: int = 0
    bound_hits: int = 0
    resolves: int = 0


def chebyshev_distance(rect: HyperRectangle, local_points: np.ndarray) -> np.ndarray:
    """点到矩形中心的切比雪夫距离，以各边边宽为单位"""
    centers = np.array([(s.lb + s.ub) / 2 for _, s in rect.sides])
    widths = np.array([s.width for _, s in rect.sides])
    widths = np.where(widths > 0, widths, 1.0)
    return np.max(np.abs(local_points - centers) / widths, axis=1)


class RectangleRefiner:
    """超矩形细化器"""

    def __init__(
        self,
        dataset: LabeledDataset,
        alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
        lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
        margin: float = 1.0,
        purity_cap: Optional[int] = None,
        logger: Optional[logging.Logger] = None
    ):
        """
        初始化细化器

        Args:
            dataset: 归一化后的数据集
            alpha_grid: alpha 取值
            lambda_grid: lambda 取值
            margin: 邻域扩展倍数
            purity_cap: impurity 超过此值的 pack 被丢弃；None 表示不限制
            logger: 日志记录器
        """
        self.dataset = dataset
        self.alpha_grid = tuple(alpha_grid)
        self.lambda_grid = tuple(lambda_grid)
        self.margin = margin
        self.purity_cap = purity_cap
        self.logger = logger or logging.getLogger(__name__)

    def fit_cell(
        self,
        x_i: np.ndarray,
        x_j: np.ndarray,
        local: np.ndarray,
        active: np.ndarray,
        distance: np.ndarray,
        alpha: float,
        lambda_: float,
        features: Sequence[int]
    ) -> Tuple[BoundaryFit, np.ndarray, int]:
        """
        求解一个网格单元，按需补充邻域外的正常点

        每轮把 h(x) > -1 的约束外正常点加入约束，按距离由近及远，
        一轮最多加入 max(当前约束数, MIN_BATCH) 个

        Args:
            x_i: 矩形内异常点（局部坐标）
            x_j: 邻域异常点
            local: 全部点在子空间上的坐标
            active: 已在约束中的正常点 ID（升序）
            distance: 全部点到矩形中心的距离
            alpha: 邻域异常点权重
            lambda_: 正常点权重
            features: 子空间

        Returns:
            (最终拟合, 最终约束中的正常点 ID, 重新求解次数)

        Raises:
            SolverError: 线性规划失败
        """
        normal_ids = self.dataset.normal_ids
        resolves = 0
        while True:
            fit = fit_boundary(x_i, x_j, local[active], alpha, lambda_, subspace=features)
            outside = np.setdiff1d(normal_ids, active, assume_unique=True)
            if outside.size == 0:
                return fit, active, resolves
            violating = outside[fit.params.evaluate(local[outside]) > -1.0 + VIOLATION_TOLERANCE]
            if violating.size == 0:
                return fit, active, resolves

            batch = max(active.size, MIN_BATCH)
            if violating.size > batch:
                nearest = np.argsort(distance[violating], kind="stable")[:batch]
                violating = violating[nearest]
            active = np.union1d(active, violating)
            resolves += 1

    def refine(self, rect: HyperRectangle, rect_index: int = 0) -> RefinementOutcome:
        """
        在 (alpha, lambda) 网格上细化一个超矩形

        Args:
            rect: 超矩形
            rect_index: 超矩形编号（用于 pack 的 key）

        Returns:
            Pareto 前沿上的 pack 及失败统计
        """
        outcome = RefinementOutcome()
        vicinity = filter_vicinity(rect, self.dataset, self.margin)
        if vicinity.inside_anomalies.size == 0:
            self.logger.debug(f"超矩形 {rect_index} 内没有异常点，跳过")
            return outcome

        outcome.cells = len(self.alpha_grid) * len(self.lambda_grid)
        features = list(rect.features)
        local = self.dataset.points[:, features]
        x_i = local[vicinity.inside_anomalies]
        x_j = local[vicinity.near_anomalies]
        distance = chebyshev_distance(rect, local)
        # 约束中的正常点在各网格单元之间累积
        active = vicinity.near_normals

        candidates = []
        for ai, alpha in enumerate(self.alpha_grid):
            for li, lambda_ in enumerate(self.lambda_grid):
                provenance = Provenance(
                    rect_index=rect_index,
                    rectangle=rect,
                    alpha=alpha,
                    lambda_=lambda_,
                    alpha_index=ai,
                    lambda_index=li,
                )
                try:
                    fit, active, resolves = self.fit_cell(
                        x_i, x_j, local, active, distance, alpha, lambda_, features
                    )
                    outcome.resolves += resolves
                    if fit.hit_bound:
                        outcome.bound_hits += 1
                    pack = make_pack(
                        f"r{rect_index}-a{ai}-l{li}",
                        fit.params,
                        self.dataset.points,
                        self.dataset.is_anomaly,
                        provenance,
                    )
                except EmptyEllipsoidError:
                    outcome.empty_cells += 1
                    continue
                except SolverError as e:
                    outcome.solver_failures += 1
                    self.logger.warning(f"超矩形 {rect_index}: {e.message}")
                    continue

                if self.purity_cap is not None and pack.impurity > self.purity_cap:
                    outcome.impure_cells += 1
                    continue
                if pack.mass > 0:
                    candidates.append(pack)

        if outcome.bound_hits:
            self.logger.warning(
                f"超矩形 {rect_index}: {outcome.bound_hits} 个网格单元的系数触及上界 {COEF_BOUND:g}"
            )
        if not candidates and outcome.impure_cells:
            self.logger.debug(f"超矩形 {rect_index} 的 pack 均超出纯度上限 {self.purity_cap}")
        elif not candidates:
            self.logger.warning(
                f"超矩形 {rect_index} 的 {len(self.alpha_grid) * len(self.lambda_grid)} "
                f"个网格单元均未得到有效椭球"
            )
        outcome.packs = pareto_frontier(candidates)
        return outcome


def refine_rectangle(
    rect: HyperRectangle,
    dataset: LabeledDataset,
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    margin: float = 1.0,
    rect_index: int = 0,
    purity_cap: Optional[int] = None
) -> List[Pack]:
    """细化一个超矩形，返回 Pareto 前沿（便捷函数）"""
    refiner = RectangleRefiner(dataset, alpha_grid, lambda_grid, margin, purity_cap)
    return refiner.refine(rect, rect_index).packs
