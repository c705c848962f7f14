"""
从判别函数参数得到椭球几何量，并生成特征规则
"""
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..density import GRID_STEP
from ..errors import EmptyEllipsoidError
from .base import BoundaryParams, Pack

logger = logging.getLogger(__name__)


def to_ellipsoid(params: BoundaryParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    c_z = -w_z / (2 u_z), s = w0 - Σ u_z c_z²,
    M⁻¹_zz = -u_z / s, radius_z = sqrt(s / -u_z)

    Args:
        params: 判别函数参数

    Returns:
        (center, inv_shape, radii)

    Raises:
        EmptyEllipsoidError: s <= 0，即 h(x) >= 0 的区域为空
    """
    u, w = params.u, params.w
    center = -w / (2.0 * u)
    scale = params.w0 - float(np.sum(u * center ** 2))
    if not scale > 0:
        raise EmptyEllipsoidError(scale)
    inv_shape = -u / scale
    radii = np.sqrt(scale / -u)
    return center, inv_shape, radii


@dataclass(frozen=True)
class FeatureRule:
    """单个特征上的 center ± radius 规则"""
    feature: int
    name: str
    center: float
    radius: float
    lower: float
    upper: float
    raw_center: float
    raw_lower: float
    raw_upper: float
    degenerate: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class Signature:
    """pack 的签名：全部特征规则的合取"""
    rules: Tuple[FeatureRule, ...]
    mass: int
    impurity: int

    def to_dict(self) -> dict:
        return {
            "rules": [asdict(rule) for rule in self.rules],
            "mass": self.mass,
            "impurity": self.impurity,
        }


def _raw(record: Optional[np.ndarray], feature: int, value: float) -> float:
    if record is None:
        return float(value)
    lo, hi = record[feature]
    return float(lo + value * (hi - lo))


def feature_rules(
    pack: Pack,
    normalization_record: Optional[np.ndarray] = None,
    feature_names: Optional[Sequence[str]] = None
) -> Signature:
    """
    生成特征规则：区间 (c - r, c + r) 裁剪到 [0, 1]，同时给出原始单位

    半径小于 KDE 网格步长的规则视为退化，区间收缩为中心点

    Args:
        pack: pack
        normalization_record: 每个特征的原始 (min, max)
        feature_names: 特征名

    Returns:
        签名
    """
    rules: List[FeatureRule] = []
    for z, feature in enumerate(pack.subspace):
        center = float(pack.center[z])
        radius = float(pack.radii[z])
        name = feature_names[feature] if feature_names is not None else f"f{feature}"
        degenerate = radius < GRID_STEP
        if degenerate:
            logger.warning(f"特征 {name} 的规则半径过小 ({radius:.3g})，视为退化")
            lower = upper = min(max(center, 0.0), 1.0)
        else:
            lower = max(center - radius, 0.0)
            upper = min(center + radius, 1.0)
        rules.append(FeatureRule(
            feature=feature,
            name=name,
            center=center,
            radius=radius,
            lower=lower,
            upper=upper,
            raw_center=_raw(normalization_record, feature, center),
            raw_lower=_raw(normalization_record, feature, lower),
            raw_upper=_raw(normalization_record, feature, upper),
            degenerate=degenerate,
        ))
    return Signature(rules=tuple(rules), mass=pack.mass, impurity=pack.impurity)


def make_pack(
    key: str,
    params: BoundaryParams,
    points: np.ndarray,
    is_anomaly: np.ndarray,
    provenance=None
) -> Pack:
    """
    由判别函数参数构造 pack，并在给定点集上统计成员

    Args:
        key: pack 标识
        params: 判别函数参数
        points: 归一化后的全维点
        is_anomaly: 异常标签
        provenance: 来源

    Returns:
        pack

    Raises:
        EmptyEllipsoidError: 椭球为空
    """
    center, inv_shape, radii = to_ellipsoid(params)
    local = np.atleast_2d(points)[:, list(params.subspace)]
    inside = ((local - center) ** 2 @ inv_shape) <= 1.0
    labels = np.asarray(is_anomaly, dtype=bool)
    return Pack(
        key=key,
        params=params,
        center=center,
        inv_shape=inv_shape,
        radii=radii,
        covered_anomalies=np.flatnonzero(inside & labels),
        enclosed_normals=np.flatnonzero(inside & ~labels),
        provenance=provenance,
    )
