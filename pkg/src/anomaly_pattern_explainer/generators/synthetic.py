"""
植入模式的合成数据生成器

每个植入模式是若干特征上宽度为 range_width 的区间的合取；
异常点落在所属模式的区间内，正常点按异常值直方图的补分布采样，
从而避开植入区间
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..dataset import LabeledDataset
from ..density import Interval
from ..errors import InputError

HISTOGRAM_BINS = 20


class SynthConfig(BaseModel):
    """合成数据配置"""
    m: int = Field(default=2000, ge=2, description="总点数")
    d: int = Field(default=20, ge=1, description="特征数")
    num_packs: int = Field(default=3, ge=1, description="植入模式数")
    max_pack_dim: int = Field(default=3, ge=1, description="模式子空间的最大维度")
    anomaly_fraction: float = Field(default=0.1, gt=0.0, lt=1.0, description="异常点比例")
    range_width: float = Field(default=0.1, gt=0.0, lt=1.0, description="植入区间宽度")
    seed: int = Field(default=0, description="随机种子")

    @model_validator(mode="after")
    def check_sizes(self) -> "SynthConfig":
        if self.max_pack_dim > self.d:
            raise ValueError(f"max_pack_dim ({self.max_pack_dim}) 不能大于 d ({self.d})")
        return self


@dataclass(frozen=True, eq=False)
class PlantedPack:
    """植入的真实模式"""
    features: Tuple[int, ...]
    intervals: Tuple[Interval, ...]
    anomaly_ids: np.ndarray

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "intervals": [[iv.lb, iv.ub] for iv in self.intervals],
            "anomaly_ids": [int(i) for i in self.anomaly_ids],
        }


def _complement_sample(
    rng: np.random.Generator,
    anomaly_values: np.ndarray,
    size: int
) -> np.ndarray:
    """按 max(h) - h_b + 0.01·max(h) 的权重选箱，箱内均匀采样"""
    hist, edges = np.histogram(anomaly_values, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    peak = hist.max()
    weights = peak - hist + 0.01 * peak
    bins = rng.choice(HISTOGRAM_BINS, size=size, p=weights / weights.sum())
    return rng.uniform(edges[bins], edges[bins + 1])


def generate_synthetic(config: SynthConfig) -> Tuple[LabeledDataset, List[PlantedPack]]:
    """
    生成带植入模式的数据集

    Args:
        config: 生成配置

    Returns:
        (未归一化的数据集, 植入模式列表)；同一种子结果完全一致

    Raises:
        InputError: 点数不足以同时容纳异常点和正常点
    """
    rng = np.random.default_rng(config.seed)
    a = max(1, int(round(config.anomaly_fraction * config.m)))
    n = config.m - a
    if n < 1:
        raise InputError(
            f"m={config.m} 与 anomaly_fraction={config.anomaly_fraction} 没有留下正常点",
            "synth",
            "invalid_config"
        )

    width = config.range_width
    layouts = []
    for _ in range(config.num_packs):
        dim = int(rng.integers(1, config.max_pack_dim + 1))
        features = tuple(int(f) for f in np.sort(rng.choice(config.d, size=dim, replace=False)))
        lower = rng.uniform(0.0, 1.0 - width, size=dim)
        layouts.append((features, tuple(Interval(float(lb), float(lb + width)) for lb in lower)))

    anomalies = rng.uniform(size=(a, config.d))
    assignment = np.arange(a) % config.num_packs
    for k, (features, intervals) in enumerate(layouts):
        rows = np.flatnonzero(assignment == k)
        for feature, interval in zip(features, intervals):
            anomalies[rows, feature] = rng.uniform(interval.lb, interval.ub, size=rows.size)

    normals = np.column_stack([
        _complement_sample(rng, anomalies[:, j], n) for j in range(config.d)
    ])

    # 打乱行顺序，ID 即打乱后的行号
    order = rng.permutation(config.m)
    points = np.vstack([anomalies, normals])[order]
    labels = np.concatenate([np.ones(a, dtype=bool), np.zeros(n, dtype=bool)])[order]
    position = np.empty(config.m, dtype=int)
    position[order] = np.arange(config.m)

    planted = [
        PlantedPack(
            features=features,
            intervals=intervals,
            anomaly_ids=np.sort(position[np.flatnonzero(assignment == k)]),
        )
        for k, (features, intervals) in enumerate(layouts)
    ]
    dataset = LabeledDataset(
        points=points,
        is_anomaly=labels,
        feature_names=tuple(f"f{j}" for j in range(config.d)),
    )
    return dataset, planted
