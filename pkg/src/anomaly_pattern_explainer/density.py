"""
一维密度估计模块

对每个特征的异常点做高斯核 KDE，按分位数阈值提取高密度区间，
作为格搜索的一维种子
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterable, List, Sequence, Tuple
import logging

import numpy as np
from scipy import stats

from .dataset import LabeledDataset
from .errors import InputError

if TYPE_CHECKING:
    from .lattice import HyperRectangle

logger = logging.getLogger(__name__)

SAMPLE_SIZE = 512
SAMPLE_XS = np.linspace(0.0, 1.0, SAMPLE_SIZE)
GRID_STEP = 1.0 / (SAMPLE_SIZE - 1)


@dataclass(frozen=True, order=True)
class Interval:
    """闭区间 [lb, ub]，端点在 [0, 1] 内"""
    lb: float
    ub: float

    def __post_init__(self):
        if not (0.0 <= self.lb <= self.ub <= 1.0):
            raise ValueError(f"非法区间: [{self.lb}, {self.ub}]")

    @property
    def width(self) -> float:
        return self.ub - self.lb

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (values >= self.lb) & (values <= self.ub)


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """512 个等距采样点上的密度"""
    sample_xs: np.ndarray
    densities: np.ndarray
    bandwidth: float


def silverman_bandwidth(values: Sequence[float]) -> float:
    """
    Silverman 经验带宽: 0.9 * min(std, IQR/1.34) * a^(-1/5)

    Args:
        values: 样本

    Returns:
        带宽

    Raises:
        InputError: 不同取值少于 2 个
    """
    values = np.asarray(values, dtype=float)
    if np.unique(values).size < 2:
        raise InputError("至少需要 2 个不同取值才能估计带宽", "density", "degenerate_values")

    sigma = float(np.std(values, ddof=1))
    spread = float(stats.iqr(values)) / 1.34
    scale = min(sigma, spread) if spread > 0 else sigma
    return 0.9 * scale * values.size ** (-0.2)


def estimate_density(values: Sequence[float], bandwidth: float) -> DensityCurve:
    """
    在 [0, 1] 的 512 个等距点上计算高斯核密度（不做边界修正）

    Args:
        values: 样本
        bandwidth: 带宽

    Returns:
        密度曲线
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InputError("样本为空", "density", "empty_values")
    if bandwidth <= 0:
        raise InputError(f"带宽必须为正: {bandwidth}", "density", "invalid_bandwidth")

    kernels = stats.norm.pdf(SAMPLE_XS[:, None], loc=values[None, :], scale=bandwidth)
    return DensityCurve(
        sample_xs=SAMPLE_XS.copy(),
        densities=kernels.mean(axis=1),
        bandwidth=float(bandwidth),
    )


def _high_density_runs(curve: DensityCurve, q: float) -> List[Tuple[int, int]]:
    """返回密度严格大于 q 分位数（最近秩）的连续采样段，按下标给出"""
    threshold = np.percentile(curve.densities, q, method="inverted_cdf")
    mask = curve.densities > threshold
    if not mask.any():
        return []

    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1

    last = curve.sample_xs.size - 1
    runs = []
    for start, end in zip(starts, ends):
        if start == end:
            start, end = max(start - 1, 0), min(end + 1, last)
        runs.append((int(start), int(end)))
    return runs


def extract_high_density_intervals(curve: DensityCurve, q: float) -> List[Interval]:
    """
    提取高密度区间

    Args:
        curve: 密度曲线
        q: 分位数（百分比）

    Returns:
        区间列表，可能为空
    """
    xs = curve.sample_xs
    return [Interval(float(xs[s]), float(xs[e])) for s, e in _high_density_runs(curve, q)]


def seed_rectangles(dataset: LabeledDataset, quantiles: Iterable[float]) -> List["HyperRectangle"]:
    """
    生成一维超矩形种子（已计算 mass / impurity）

    Args:
        dataset: 归一化后的数据集
        quantiles: 分位数列表

    Returns:
        去重后的一维 HyperRectangle 列表，按 (特征, 区间) 排序
    """
    from .lattice import HyperRectangle, mass_and_impurity

    quantiles = list(quantiles)
    anomalies = dataset.points[dataset.is_anomaly]
    seen: Dict[Tuple[int, int, int], Interval] = {}

    for feature in range(dataset.d):
        if dataset.degenerate[feature]:
            continue
        values = anomalies[:, feature]
        if np.unique(values).size < 2:
            logger.debug(f"特征 {dataset.feature_names[feature]} 的异常取值不足，跳过")
            continue

        curve = estimate_density(values, silverman_bandwidth(values))
        for q in quantiles:
            for start, end in _high_density_runs(curve, q):
                key = (feature, start, end)
                if key not in seen:
                    seen[key] = Interval(float(SAMPLE_XS[start]), float(SAMPLE_XS[end]))

    seeds = []
    for (feature, _, _), interval in sorted(seen.items()):
        rect = HyperRectangle(sides=((feature, interval),))
        mass, impurity, _, _ = mass_and_impurity(rect, dataset)
        seeds.append(rect.with_counts(mass, impurity))

    logger.info(f"KDE 生成 {len(seeds)} 个一维种子")
    return seeds
