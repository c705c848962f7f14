"""
评估模块

pack 打分、AUPRC、可解释性指标以及合成数据上的模式恢复统计
"""
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Dict, List, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .dataset import LabeledDataset
from .errors import InputError
from .mdl import covered_ids
from .refine import Pack, feature_rules

if TYPE_CHECKING:
    from .generators.synthetic import PlantedPack

# 空 packing 的分数：比任何 h(x) 都小
EMPTY_SCORE = -float(np.finfo(float).max)


def score_points(packing: Sequence[Pack], points: np.ndarray) -> np.ndarray:
    """
    score(x) = max_p h_p(x)，在每个 pack 的子空间上计算

    分数 >= 0 的点被判为异常

    Args:
        packing: pack 列表
        points: 归一化后的全维点 (m, d)

    Returns:
        每个点的分数
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not packing:
        return np.full(points.shape[0], EMPTY_SCORE)
    return np.max(np.vstack([p.score(points) for p in packing]), axis=0)


def score_instance(packing: Sequence[Pack], x: np.ndarray) -> float:
    """单个点的分数"""
    return float(score_points(packing, np.asarray(x, dtype=float).reshape(1, -1))[0])


def auprc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """
    精确率-召回率曲线下面积

    按分数降序排列（同分按原顺序），依次取前 k 个点得到
    (recall_k, precision_k)，在最前面补 (0, precision_1)，用梯形法积分

    Args:
        scores: 分数
        labels: 真实标签（True 为异常）

    Returns:
        [0, 1] 内的面积

    Raises:
        InputError: 没有正样本或长度不一致
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise InputError("分数与标签长度不一致", "evaluate", "shape_mismatch")
    positives = int(labels.sum())
    if positives == 0:
        raise InputError("没有正样本，AUPRC 无定义", "evaluate", "no_positives")

    order = np.argsort(-scores, kind="stable")
    hits = np.cumsum(labels[order])
    precision = hits / np.arange(1, labels.size + 1)
    recall = hits / positives
    precision = np.concatenate([precision[:1], precision])
    recall = np.concatenate([[0.0], recall])
    return float(trapezoid(precision, recall))


@dataclass
class InterpretabilityReport:
    """可解释性指标"""
    num_packs: int
    avg_rule_length: float
    avg_impurity_fraction: float
    avg_interval_width: float

    def to_dict(self) -> dict:
        return asdict(self)


def interpretability_report(
    packing: Sequence[Pack],
    dataset: LabeledDataset
) -> InterpretabilityReport:
    """
    可解释性指标

    - avg_rule_length: 平均子空间维度
    - avg_impurity_fraction: 平均 |N_k| / n
    - avg_interval_width: 全部规则区间（裁剪到 [0, 1] 后）的平均宽度

    空 packing 的三项平均值均为 0

    Args:
        packing: pack 列表
        dataset: 数据集

    Returns:
        指标报告
    """
    if not packing:
        return InterpretabilityReport(0, 0.0, 0.0, 0.0)

    widths = [
        rule.width
        for p in packing
        for rule in feature_rules(p, feature_names=dataset.feature_names).rules
    ]
    return InterpretabilityReport(
        num_packs=len(packing),
        avg_rule_length=float(np.mean([p.dimension for p in packing])),
        avg_impurity_fraction=float(np.mean([p.impurity for p in packing]) / dataset.n),
        avg_interval_width=float(np.mean(widths)),
    )


@dataclass
class RecoveryReport:
    """合成数据上的模式恢复统计"""
    num_planted: int
    num_found: int
    anomaly_coverage: float
    normal_fraction: float
    best_jaccard: List[float] = field(default_factory=list)
    matched_subspaces: List[bool] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = np.union1d(a, b).size
    return np.intersect1d(a, b).size / union if union else 0.0


def recovery_report(
    packing: Sequence[Pack],
    planted: Sequence["PlantedPack"],
    dataset: LabeledDataset
) -> RecoveryReport:
    """
    将找到的 packing 与植入的模式比较

    对每个植入模式，取与其异常点集合 Jaccard 最大的 pack，
    并记录该 pack 的子空间是否与植入特征一致

    Args:
        packing: 找到的 pack
        planted: 植入的模式
        dataset: 生成的数据集

    Returns:
        恢复统计
    """
    covered = covered_ids(packing)
    normals = (
        np.unique(np.concatenate([p.enclosed_normals for p in packing]))
        if packing else np.empty(0, dtype=int)
    )

    best_jaccard: List[float] = []
    matched: List[bool] = []
    for truth in planted:
        scores = [_jaccard(truth.anomaly_ids, p.covered_anomalies) for p in packing]
        if not scores:
            best_jaccard.append(0.0)
            matched.append(False)
            continue
        best = int(np.argmax(scores))
        best_jaccard.append(float(scores[best]))
        matched.append(tuple(packing[best].subspace) == tuple(truth.features))

    return RecoveryReport(
        num_planted=len(planted),
        num_found=len(packing),
        anomaly_coverage=covered.size / dataset.a,
        normal_fraction=normals.size / dataset.n,
        best_jaccard=best_jaccard,
        matched_subspaces=matched,
    )
