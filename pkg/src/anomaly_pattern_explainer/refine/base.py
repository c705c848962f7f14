"""
细化模块的基础类型

BoundaryParams 描述二次判别函数 h(x) = Σ u_z x_z² + w_z x_z + w0，
Pack 是由它导出的轴对齐超椭球
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..lattice import HyperRectangle

# u_z <= -1 的数值容差
U_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class BoundaryParams:
    """对角二次判别函数的参数"""
    u: np.ndarray
    w: np.ndarray
    w0: float
    subspace: Tuple[int, ...]

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1)
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if u.shape != w.shape or u.size != len(self.subspace):
            raise ValueError("u、w 与子空间维度不一致")
        if np.any(u > -1.0 + U_TOLERANCE):
            raise ValueError(f"对角系数必须 <= -1: {u}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w0", float(self.w0))
        object.__setattr__(self, "subspace", tuple(int(f) for f in self.subspace))

    @property
    def dimension(self) -> int:
        return len(self.subspace)

    def evaluate(self, local_points: np.ndarray) -> np.ndarray:
        """在子空间坐标上计算 h(x)"""
        x = np.atleast_2d(np.asarray(local_points, dtype=float))
        return (x * x) @ self.u + x @ self.w + self.w0


@dataclass(frozen=True, eq=False)
class BoundaryFit:
    """一次线性规划求解的结果"""
    params: BoundaryParams
    slack_i: np.ndarray
    slack_j: np.ndarray
    slack_l: np.ndarray
    objective: float
    hit_bound: bool = False


@dataclass(frozen=True)
class Provenance:
    """pack 的来源：超矩形及 (alpha, lambda) 网格单元"""
    rect_index: int
    rectangle: HyperRectangle
    alpha: float
    lambda_: float
    alpha_index: int
    lambda_index: int


@dataclass(frozen=True, eq=False)
class Pack:
    """
    子空间中的轴对齐超椭球

    covered_anomalies / enclosed_normals 是全数据集上按
    (x - c)ᵀ M⁻¹ (x - c) <= 1 判定的点 ID（升序）
    """
    key: str
    params: BoundaryParams
    center: np.ndarray
    inv_shape: np.ndarray
    radii: np.ndarray
    covered_anomalies: np.ndarray
    enclosed_normals: np.ndarray
    provenance: Optional[Provenance] = None

    @property
    def subspace(self) -> Tuple[int, ...]:
        return self.params.subspace

    @property
    def dimension(self) -> int:
        return self.params.dimension

    @property
    def mass(self) -> int:
        return int(self.covered_anomalies.size)

    @property
    def impurity(self) -> int:
        return int(self.enclosed_normals.size)

    @property
    def total_points(self) -> int:
        """m_k：椭球内的全部点数"""
        return self.mass + self.impurity

    def membership(self, points: np.ndarray) -> np.ndarray:
        """全维点的椭球成员判定"""
        local = np.atleast_2d(points)[:, list(self.subspace)]
        return ((local - self.center) ** 2 @ self.inv_shape) <= 1.0

    def score(self, points: np.ndarray) -> np.ndarray:
        """全维点在本 pack 子空间上的 h(x)"""
        return self.params.evaluate(np.atleast_2d(points)[:, list(self.subspace)])
