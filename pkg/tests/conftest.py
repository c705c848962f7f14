"""
共享测试夹具
"""
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import pytest

from anomaly_pattern_explainer.dataset import LabeledDataset
from anomaly_pattern_explainer.refine import BoundaryParams, Pack
from anomaly_pattern_explainer.refine.ellipsoid import to_ellipsoid
from anomaly_pattern_explainer.utils.logger import PACKAGE_LOGGER


@pytest.fixture(autouse=True)
def reset_package_logger():
    """CLI 测试会重新配置包日志器，这里恢复传播以便 caplog 捕获"""
    logger = logging.getLogger(PACKAGE_LOGGER)
    yield
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


def make_dataset(
    points: Sequence[Sequence[float]],
    labels: Sequence[int],
    names: Optional[Sequence[str]] = None,
    normalized: bool = True
) -> LabeledDataset:
    points = np.asarray(points, dtype=float)
    if names is None:
        names = [f"f{j}" for j in range(points.shape[1])]
    return LabeledDataset(
        points=points,
        is_anomaly=np.asarray(labels, dtype=bool),
        feature_names=tuple(names),
        normalized=normalized,
    )


def geometry_params(center: Sequence[float], radii: Sequence[float], subspace: Sequence[int]) -> BoundaryParams:
    """s = 1 时与给定中心、半径对应的判别函数参数"""
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    u = -1.0 / radii ** 2
    w = -2.0 * u * center
    w0 = 1.0 + float(np.sum(u * center ** 2))
    return BoundaryParams(u=u, w=w, w0=w0, subspace=tuple(subspace))


def make_pack(
    key: str,
    covered: Sequence[int],
    normals: Sequence[int] = (),
    subspace: Sequence[int] = (0,),
    center: Optional[Sequence[float]] = None,
    radii: Optional[Sequence[float]] = None
) -> Pack:
    """手工构造 pack；成员集合直接给出，不与几何量核对"""
    dim = len(subspace)
    center = [0.5] * dim if center is None else center
    radii = [0.1] * dim if radii is None else radii
    params = geometry_params(center, radii, subspace)
    c, inv_shape, r = to_ellipsoid(params)
    return Pack(
        key=key,
        params=params,
        center=c,
        inv_shape=inv_shape,
        radii=r,
        covered_anomalies=np.asarray(sorted(covered), dtype=int),
        enclosed_normals=np.asarray(sorted(normals), dtype=int),
    )


def write_csv(path: Path, points: np.ndarray, labels: np.ndarray, names: Sequence[str], label: str = "y") -> Path:
    frame = pd.DataFrame(np.asarray(points), columns=list(names))
    frame[label] = np.asarray(labels, dtype=int)
    frame.to_csv(path, index=False)
    return path


def two_cluster_points(seed: int = 0, m_normal: int = 300, per_cluster: int = 40):
    """
    两个互不相交的二维异常团 + 避开它们的正常点

    团 A: f0, f1 ∈ [0.1, 0.2]；团 B: f2, f3 ∈ [0.75, 0.85]
    """
    rng = np.random.default_rng(seed)
    d = 4
    normals = rng.uniform(size=(m_normal * 3, d))
    in_a = (normals[:, 0] < 0.3) & (normals[:, 1] < 0.3)
    in_b = (normals[:, 2] > 0.65) & (normals[:, 3] > 0.65)
    normals = normals[~in_a & ~in_b][:m_normal]

    a = rng.uniform(size=(per_cluster, d))
    a[:, 0] = rng.uniform(0.1, 0.2, per_cluster)
    a[:, 1] = rng.uniform(0.1, 0.2, per_cluster)
    b = rng.uniform(size=(per_cluster, d))
    b[:, 2] = rng.uniform(0.75, 0.85, per_cluster)
    b[:, 3] = rng.uniform(0.75, 0.85, per_cluster)

    points = np.vstack([normals, a, b])
    labels = np.concatenate([np.zeros(len(normals)), np.ones(2 * per_cluster)]).astype(bool)
    # 加一个孤立异常点
    outlier = np.array([[0.95, 0.05, 0.05, 0.95]])
    points = np.vstack([points, outlier])
    labels = np.append(labels, True)
    # 固定 min / max，使归一化不改变坐标
    points = np.vstack([points, np.zeros((1, d)), np.ones((1, d))])
    labels = np.append(labels, [False, False])
    return points, labels


@pytest.fixture
def two_cluster_dataset() -> LabeledDataset:
    points, labels = two_cluster_points()
    return make_dataset(points, labels, normalized=False)
