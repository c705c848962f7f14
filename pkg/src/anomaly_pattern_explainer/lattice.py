"""
子空间格搜索模块 (SubClus)

自底向上的 Apriori 式搜索：质量 (mass) 满足阈值的超矩形参与下一层
的 join/prune，同时满足纯度 (impurity) 阈值的超矩形被输出
"""
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from .dataset import LabeledDataset
from .density import Interval
from .errors import InputError

logger = logging.getLogger(__name__)

Side = Tuple[int, Interval]


@dataclass(frozen=True)
class HyperRectangle:
    """
    超矩形：按特征下标严格递增排列的 (特征, 区间) 边

    相等性只看 sides；mass / impurity 为缓存值
    """
    sides: Tuple[Side, ...]
    mass: Optional[int] = field(default=None, compare=False)
    impurity: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.sides:
            raise ValueError("超矩形至少需要一条边")
        features = [f for f, _ in self.sides]
        if any(a >= b for a, b in zip(features, features[1:])):
            raise ValueError(f"特征下标必须严格递增: {features}")

    @property
    def level(self) -> int:
        return len(self.sides)

    @property
    def features(self) -> Tuple[int, ...]:
        return tuple(f for f, _ in self.sides)

    @property
    def sort_key(self) -> Tuple[Tuple[int, float, float], ...]:
        return tuple((f, s.lb, s.ub) for f, s in self.sides)

    def with_counts(self, mass: int, impurity: int) -> "HyperRectangle":
        return replace(self, mass=int(mass), impurity=int(impurity))

    def projection(self, drop: int) -> Tuple[Side, ...]:
        """去掉第 drop 条边后的边集"""
        return self.sides[:drop] + self.sides[drop + 1:]

    def to_dict(self, feature_names: Optional[Sequence[str]] = None) -> dict:
        return {
            "features": [f for f, _ in self.sides],
            "names": [feature_names[f] for f, _ in self.sides] if feature_names else None,
            "intervals": [[s.lb, s.ub] for _, s in self.sides],
            "mass": self.mass,
            "impurity": self.impurity,
        }


def containment_mask(sides: Sequence[Side], points: np.ndarray) -> np.ndarray:
    """包含判定：所有边上 lb <= x <= ub（两端闭）"""
    mask = np.ones(points.shape[0], dtype=bool)
    for feature, interval in sides:
        mask &= interval.contains(points[:, feature])
    return mask


def mass_and_impurity(
    rect: HyperRectangle,
    dataset: LabeledDataset
) -> Tuple[int, int, np.ndarray, np.ndarray]:
    """
    扫描全部点，统计超矩形内的异常点和正常点

    Args:
        rect: 超矩形
        dataset: 归一化后的数据集

    Returns:
        (mass, impurity, 异常点 ID, 正常点 ID)
    """
    inside = containment_mask(rect.sides, dataset.points)
    anomaly_ids = np.flatnonzero(inside & dataset.is_anomaly)
    normal_ids = np.flatnonzero(inside & ~dataset.is_anomaly)
    return anomaly_ids.size, normal_ids.size, anomaly_ids, normal_ids


def generate_candidates(level_k: Sequence[HyperRectangle]) -> List[HyperRectangle]:
    """
    由 k 维超矩形生成 k+1 维候选（join + prune）

    join: 前 k-1 条边完全相同且最后一条边的特征 u_k < v_k;
    prune: 任一 k 维投影不在输入集合中即丢弃。候选不计算 mass

    Args:
        level_k: 同一层的超矩形

    Returns:
        去重、按规范顺序排列的 k+1 维候选
    """
    if not level_k:
        return []
    levels = {r.level for r in level_k}
    if len(levels) != 1:
        raise InputError(f"输入的超矩形层数不一致: {sorted(levels)}", "lattice", "mixed_levels")

    existing = {r.sides for r in level_k}
    groups: Dict[Tuple[Side, ...], List[Side]] = defaultdict(list)
    for sides in sorted(existing, key=lambda s: tuple((f, i.lb, i.ub) for f, i in s)):
        groups[sides[:-1]].append(sides[-1])

    candidates = []
    for prefix, tails in groups.items():
        for i, tail_u in enumerate(tails):
            for tail_v in tails[i + 1:]:
                if tail_u[0] >= tail_v[0]:
                    continue
                sides = prefix + (tail_u, tail_v)
                # 去掉末尾两条之一的投影就是 u、v 本身
                if all(sides[:z] + sides[z + 1:] in existing for z in range(len(prefix))):
                    candidates.append(HyperRectangle(sides=sides))

    return sorted(set(candidates), key=lambda r: r.sort_key)


def subclus(
    dataset: LabeledDataset,
    seeds: Sequence[HyperRectangle],
    ms: int,
    mu: int,
    level_cap: int = 6,
    trace: Optional[List[dict]] = None
) -> List[HyperRectangle]:
    """
    SubClus 格搜索

    Args:
        dataset: 归一化后的数据集
        seeds: 一维种子
        ms: 质量阈值（最少异常点数）
        mu: 纯度阈值（最多正常点数）
        level_cap: 最高层数
        trace: 若给出，追加每层的候选统计（用于调试导出）

    Returns:
        所有满足 mass >= ms 且 impurity <= mu 的超矩形（带计数）
    """
    if ms < 1 or mu < 0:
        raise InputError(f"非法阈值 ms={ms}, mu={mu}", "lattice", "invalid_threshold")

    mask_cache: Dict[Side, np.ndarray] = {}

    def side_mask(side: Side) -> np.ndarray:
        if side not in mask_cache:
            mask_cache[side] = side[1].contains(dataset.points[:, side[0]])
        return mask_cache[side]

    output: List[HyperRectangle] = []
    candidates = sorted(set(seeds), key=lambda r: r.sort_key)
    level = 1
    while candidates:
        survivors = []
        for rect in candidates:
            inside = np.logical_and.reduce([side_mask(s) for s in rect.sides])
            mass = int(np.count_nonzero(inside & dataset.is_anomaly))
            if mass < ms:
                continue
            impurity = int(np.count_nonzero(inside)) - mass
            rect = rect.with_counts(mass, impurity)
            survivors.append(rect)
            if impurity <= mu:
                output.append(rect)

        logger.info(
            f"第 {level} 层: 候选 {len(candidates)}, 满足质量 {len(survivors)}, "
            f"累计输出 {len(output)}"
        )
        if trace is not None:
            trace.append({"level": level, "rectangles": [r.to_dict(dataset.feature_names) for r in survivors]})

        next_candidates = generate_candidates(survivors)
        if level >= level_cap:
            if next_candidates:
                logger.warning(
                    f"达到层数上限 {level_cap}，仍有 {len(next_candidates)} 个候选未展开"
                )
            break
        candidates = next_candidates
        level += 1

    return output


def default_thresholds(seeds: Sequence[HyperRectangle]) -> Tuple[int, int]:
    """
    默认阈值：一维种子 mass / impurity 的下中位数，ms 下限为 2

    Args:
        seeds: 已计数的一维种子

    Returns:
        (ms, mu)
    """
    if not seeds:
        raise InputError("没有种子，无法确定默认阈值", "lattice", "empty_seeds")
    if any(s.mass is None or s.impurity is None for s in seeds):
        raise InputError("种子尚未计算 mass / impurity", "lattice", "uncounted_seeds")

    masses = sorted(s.mass for s in seeds)
    impurities = sorted(s.impurity for s in seeds)
    middle = (len(seeds) - 1) // 2
    return max(2, masses[middle]), impurities[middle]


def dump_lattice(trace: List[dict], path: Path) -> Path:
    """把每层候选写成 JSON"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"levels": trace}, indent=2, ensure_ascii=False), encoding="utf-8")
    return path
