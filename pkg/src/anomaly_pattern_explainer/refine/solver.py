"""
带松弛惩罚的二次判别求解

U 限制为对角后，h 对 (u, w, w0) 是线性的，原问题化为线性规划：

    min  Σ ε_i + α Σ ε_j + λ Σ ε_l
    s.t. h(x_i) >= 1 - ε_i,  h(x_j) >= 1 - ε_j,  h(x_l) <= -1 + ε_l
         u_z <= -1,  ε >= 0,  |系数| <= COEF_BOUND

用 scipy 的 HiGHS 求解
"""
from typing import Optional, Sequence
import logging

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..errors import InputError, SolverError
from .base import BoundaryFit, BoundaryParams

logger = logging.getLogger(__name__)

COEF_BOUND = 1e6

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


def _as_matrix(points: Optional[np.ndarray], dim: int) -> np.ndarray:
    if points is None:
        return np.empty((0, dim))
    return np.asarray(points, dtype=float).reshape(-1, dim)


def fit_boundary(
    x_i: np.ndarray,
    x_j: Optional[np.ndarray],
    x_l: Optional[np.ndarray],
    alpha: float,
    lambda_: float,
    subspace: Optional[Sequence[int]] = None
) -> BoundaryFit:
    """
    求解对角二次判别线性规划

    Args:
        x_i: 超矩形内的异常点（子空间坐标，非空）
        x_j: 邻域内、超矩形外的异常点
        x_l: 邻域内的正常点
        alpha: x_j 松弛的惩罚
        lambda_: x_l 松弛的惩罚
        subspace: 特征下标，缺省为 0..d'-1

    Returns:
        参数、按参数重新计算的松弛量以及目标值

    Raises:
        SolverError: 求解器未返回最优解
    """
    x_i = np.atleast_2d(np.asarray(x_i, dtype=float))
    if x_i.size == 0:
        raise InputError("x_i 不能为空", "refine", "empty_inside")
    if alpha <= 0 or lambda_ <= 0:
        raise InputError(f"惩罚必须为正: alpha={alpha}, lambda={lambda_}", "refine", "invalid_penalty")

    dim = x_i.shape[1]
    x_j = _as_matrix(x_j, dim)
    x_l = _as_matrix(x_l, dim)
    if subspace is None:
        subspace = tuple(range(dim))
    n_i, n_j, n_l = len(x_i), len(x_j), len(x_l)
    n_coef = 2 * dim + 1

    # 行: [x², x, 1] 对应 (u, w, w0)；包含约束取负号
    def features(x: np.ndarray) -> np.ndarray:
        return np.hstack([x * x, x, np.ones((len(x), 1))])

    coef_rows = np.vstack([-features(x_i), -features(x_j), features(x_l)])
    n_slack = n_i + n_j + n_l
    a_ub = sparse.hstack([
        sparse.csr_matrix(coef_rows),
        -sparse.identity(n_slack, format="csr"),
    ], format="csr")
    b_ub = -np.ones(n_slack)

    c = np.concatenate([
        np.zeros(n_coef),
        np.ones(n_i),
        np.full(n_j, alpha),
        np.full(n_l, lambda_),
    ])
    bounds = (
        [(-COEF_BOUND, -1.0)] * dim
        + [(-COEF_BOUND, COEF_BOUND)] * (dim + 1)
        + [(0.0, None)] * n_slack
    )

    result = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
    if result.status != 0 or result.x is None:
        raise SolverError(
            f"线性规划求解失败 (alpha={alpha:g}, lambda={lambda_:g}): {result.message}",
            alpha=alpha,
            lambda_=lambda_,
            details=f"status={result.status}",
        )

    coefs = result.x[:n_coef]
    u = np.minimum(coefs[:dim], -1.0)
    w = coefs[dim:2 * dim]
    w0 = float(coefs[-1])
    params = BoundaryParams(u=u, w=w, w0=w0, subspace=tuple(subspace))

    # 松弛量按参数重算，保证约束在报告值上严格成立
    slack_i = np.maximum(0.0, 1.0 - params.evaluate(x_i)) if n_i else np.empty(0)
    slack_j = np.maximum(0.0, 1.0 - params.evaluate(x_j)) if n_j else np.empty(0)
    slack_l = np.maximum(0.0, params.evaluate(x_l) + 1.0) if n_l else np.empty(0)
    objective = float(slack_i.sum() + alpha * slack_j.sum() + lambda_ * slack_l.sum())

    hit_bound = bool(np.any(np.abs(coefs) >= COEF_BOUND * (1 - 1e-9)))
    if hit_bound:
        logger.debug(f"系数触及上界 (alpha={alpha:g}, lambda={lambda_:g})")

    return BoundaryFit(
        params=params,
        slack_i=slack_i,
        slack_j=slack_j,
        slack_l=slack_l,
        objective=objective,
        hit_bound=hit_bound,
    )
