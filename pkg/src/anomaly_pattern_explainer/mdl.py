"""
MDL 编码模块

计算 pack、packing、例外点和离群点的编码比特数，以及选择阶段
最大化的编码缩减目标 R_ℓ
"""
import math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Sequence

import numpy as np
from scipy.special import gammaln

from .dataset import LabeledDataset
from .errors import InputError
from .refine import Pack

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EncodingParams:
    """编码方案的常量"""
    d: int
    m: int
    a: int
    log2_f: float = 10.0
    candidate_pool_cost: float = 0.0
    pool_keys: FrozenSet[str] = field(default_factory=frozenset)
    full_shape_cost: bool = False

    def __post_init__(self):
        if self.log2_f <= 0:
            raise InputError(f"log2_f 必须为正: {self.log2_f}", "mdl", "invalid_precision")
        if self.candidate_pool_cost < 0:
            raise InputError("候选池代价不能为负", "mdl", "invalid_pool_cost")

    @property
    def unit_cost(self) -> float:
        """c_u = d·log2 f，单独编码一个点的比特数"""
        return self.d * self.log2_f

    @property
    def naive_bits(self) -> float:
        return self.a * self.unit_cost

    @classmethod
    def for_pool(
        cls,
        dataset: LabeledDataset,
        pool: Sequence[Pack],
        log2_f: float = 10.0,
        full_shape_cost: bool = False
    ) -> "EncodingParams":
        """
        针对候选池 E 计算常数项 log*|E| + Σ L(p')

        Args:
            dataset: 数据集
            pool: 候选 pack
            log2_f: 每坐标比特数
            full_shape_cost: 是否按满矩阵计算形状代价

        Returns:
            编码参数
        """
        base = cls(d=dataset.d, m=dataset.m, a=dataset.a, log2_f=log2_f, full_shape_cost=full_shape_cost)
        keys = frozenset(p.key for p in pool)
        if len(keys) != len(pool):
            raise InputError("候选池中存在重复的 pack key", "mdl", "duplicate_keys")
        pool_cost = log_star(len(pool)) + sum(pack_cost(p, base) for p in pool)
        return cls(
            d=base.d,
            m=base.m,
            a=base.a,
            log2_f=log2_f,
            candidate_pool_cost=pool_cost,
            pool_keys=keys,
            full_shape_cost=full_shape_cost,
        )


@dataclass
class PackingCostReport:
    """给定 packing 的描述长度报告"""
    K: int
    per_pack_bits: List[float]
    outlier_ids: List[int]
    total_bits: float
    naive_bits: float
    savings_percent: float

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "per_pack_bits": self.per_pack_bits,
            "outlier_ids": self.outlier_ids,
            "total_bits": self.total_bits,
            "naive_bits": self.naive_bits,
            "savings_percent": self.savings_percent,
        }


def log_star(k: int) -> float:
    """
    通用整数编码 log*(k)：log2(k) + log2(log2(k)) + … 只累加正项

    常数 log2(c) 省略；log*(0) = log*(1) = 0
    """
    if k < 0:
        raise ValueError(f"log* 的参数必须非负: {k}")
    total = 0.0
    value = math.log2(k) if k > 1 else 0.0
    while value > 0:
        total += value
        value = math.log2(value)
    return total


def log2_binomial(n: int, k: int) -> float:
    """log2 C(n, k)，用 log-gamma 计算"""
    if k < 0 or k > n:
        raise ValueError(f"非法二项式参数: C({n}, {k})")
    return float((gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) / _LN2)


def encoding_cost(d_k: int, n_k: int, m_k: int, params: EncodingParams) -> float:
    """
    L(p) = log* d_k + log2 C(d, d_k) + 形状项 + log* n_k + log2 C(m_k, n_k)

    形状项默认为对角情形 2·d_k·log2 f（中心 + 对角形状），
    full_shape_cost 时为 d_k(d_k+1)·log2 f

    Args:
        d_k: 子空间维度
        n_k: 椭球内正常点数
        m_k: 椭球内总点数
        params: 编码参数

    Returns:
        比特数
    """
    if d_k < 1 or d_k > params.d:
        raise InputError(f"子空间维度 {d_k} 超出 [1, {params.d}]", "mdl", "invalid_dimension")
    if n_k < 0 or n_k > m_k:
        raise InputError(f"例外点数 {n_k} 超出总点数 {m_k}", "mdl", "invalid_exceptions")

    shape_terms = d_k * (d_k + 1) if params.full_shape_cost else 2 * d_k
    return (
        log_star(d_k)
        + log2_binomial(params.d, d_k)
        + shape_terms * params.log2_f
        + log_star(n_k)
        + log2_binomial(m_k, n_k)
    )


def pack_cost(pack: Pack, params: EncodingParams) -> float:
    """单个 pack 的编码比特数 L(p)"""
    return encoding_cost(pack.dimension, pack.impurity, pack.total_points, params)


def packing_cost(packing: Sequence[Pack], params: EncodingParams) -> float:
    """ℓ(P) = log* K + Σ L(p)"""
    return log_star(len(packing)) + sum(pack_cost(p, params) for p in packing)


def covered_ids(packing: Sequence[Pack]) -> np.ndarray:
    """packing 覆盖的异常点 ID 并集"""
    if not packing:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate([p.covered_anomalies for p in packing]))


def description_length(
    packing: Sequence[Pack],
    dataset: LabeledDataset,
    params: EncodingParams
) -> PackingCostReport:
    """
    L(A | D, P) = (a - |∪A_p|)·d·log2 f + ℓ(P)

    Args:
        packing: 选中的 pack
        dataset: 数据集
        params: 编码参数

    Returns:
        描述长度报告
    """
    covered = covered_ids(packing)
    outliers = np.setdiff1d(dataset.anomaly_ids, covered)
    per_pack = [pack_cost(p, params) for p in packing]
    total = outliers.size * params.unit_cost + log_star(len(packing)) + sum(per_pack)
    naive = dataset.a * params.unit_cost
    return PackingCostReport(
        K=len(packing),
        per_pack_bits=per_pack,
        outlier_ids=[int(i) for i in outliers],
        total_bits=float(total),
        naive_bits=float(naive),
        savings_percent=float(100.0 * (1.0 - total / naive)),
    )


def reduction_objective(
    subset: Sequence[Pack],
    params: EncodingParams,
    fixed_cardinality: bool = False
) -> float:
    """
    R_ℓ(S) = |∪A_p|·c_u - log*|S| - Σ L(p) + [log*|E| + Σ_{p'∈E} L(p')]

    fixed_cardinality=True 时省略 log*|S|，即选择内部使用的 R'_ℓ

    Args:
        subset: 候选池的子集
        params: 由 EncodingParams.for_pool 得到的参数
        fixed_cardinality: 是否使用固定基数的变体

    Returns:
        比特数（非负）

    Raises:
        InputError: 子集不在候选池内
    """
    outside = [p.key for p in subset if p.key not in params.pool_keys]
    if outside:
        raise InputError(f"pack 不在候选池中: {', '.join(outside)}", "mdl", "not_in_pool")

    coverage = covered_ids(subset).size * params.unit_cost
    model = sum(pack_cost(p, params) for p in subset)
    if not fixed_cardinality:
        model += log_star(len(subset))
    return float(coverage - model + params.candidate_pool_cost)
