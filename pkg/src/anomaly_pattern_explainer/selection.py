"""
packing 选择模块

对每个 K 用 Random-Greedy 最大化固定基数目标 R'_ℓ，
再以 R_ℓ 比较不同 K 的结果
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from .dataset import LabeledDataset
from .errors import InputError
from .mdl import EncodingParams, log_star, pack_cost, reduction_objective
from .refine import Pack

BRUTE_FORCE_LIMIT = 20


@dataclass
class SelectionResult:
    """选择结果"""
    best_K: int
    packing: List[Pack]
    objective_value: float
    per_K_trace: List[Tuple[int, float]] = field(default_factory=list)
    seed: int = 0


class CoverageTable:
    """
    候选池的覆盖矩阵与代价

    边际增益只依赖于新覆盖的异常点数，随选择增量维护
    """

    def __init__(self, pool: Sequence[Pack], params: EncodingParams):
        self.pool = list(pool)
        self.params = params
        anomaly_ids = np.unique(np.concatenate([p.covered_anomalies for p in pool])) if pool else np.empty(0, int)
        column = {int(a): j for j, a in enumerate(anomaly_ids)}
        self.coverage = np.zeros((len(pool), anomaly_ids.size), dtype=bool)
        for i, p in enumerate(pool):
            self.coverage[i, [column[int(a)] for a in p.covered_anomalies]] = True
        self.costs = np.array([pack_cost(p, params) for p in pool], dtype=float)

    def random_greedy(self, k: int, seed: int) -> List[int]:
        """
        Random-Greedy：每轮在增益最高的 k 个元素中均匀抽取；
        剩余 pack 不足 k 个时用零增益哑元补齐，抽到哑元则本轮不加入

        Args:
            k: 基数
            seed: 随机种子

        Returns:
            选中的 pack 下标（升序）
        """
        rng = np.random.default_rng(seed)
        size = len(self.pool)
        available = np.ones(size, dtype=bool)
        covered = np.zeros(self.coverage.shape[1], dtype=bool)
        new_counts = self.coverage.sum(axis=1).astype(float)
        selected: List[int] = []

        for _ in range(k):
            gains = self.params.unit_cost * new_counts - self.costs
            ids = np.flatnonzero(available)
            padding = max(0, k - ids.size)
            entry_ids = np.concatenate([ids, np.full(padding, -1)])
            entry_gains = np.concatenate([gains[ids], np.zeros(padding)])
            # 增益降序，相同增益按 pack 下标，哑元排在最后
            order = np.lexsort((np.arange(entry_ids.size), -entry_gains))
            top = order[:k]
            chosen = int(entry_ids[top[rng.integers(top.size)]])
            if chosen < 0:
                continue

            selected.append(chosen)
            available[chosen] = False
            newly = self.coverage[chosen] & ~covered
            if newly.any():
                covered |= newly
                new_counts -= self.coverage[:, newly].sum(axis=1)

        return sorted(selected)


def random_greedy(
    pool: Sequence[Pack],
    k: int,
    params: EncodingParams,
    seed: int
) -> List[Pack]:
    """
    基数约束下的 Random-Greedy

    Args:
        pool: 候选 pack（非空）
        k: 迭代次数 / 基数上限 (>= 1)
        params: 编码参数
        seed: 随机种子

    Returns:
        大小不超过 k 的子集（按候选池顺序）
    """
    if k < 1:
        raise InputError(f"K 必须 >= 1: {k}", "select", "invalid_k")
    if not pool:
        raise InputError("候选池为空", "select", "empty_pool")
    table = CoverageTable(pool, params)
    return [pool[i] for i in table.random_greedy(k, seed)]


def brute_force_select(
    pool: Sequence[Pack],
    k: int,
    params: EncodingParams
) -> Tuple[List[Pack], float]:
    """
    穷举所有大小 <= k 的子集，最大化 R'_ℓ（测试用的精确解）

    Args:
        pool: 候选 pack（不超过 20 个）
        k: 基数上限
        params: 编码参数

    Returns:
        (最优子集, R'_ℓ 值)
    """
    if len(pool) > BRUTE_FORCE_LIMIT:
        raise InputError(
            f"候选池过大，无法穷举: {len(pool)} > {BRUTE_FORCE_LIMIT}", "select", "pool_too_large"
        )

    best: List[Pack] = []
    best_value = reduction_objective([], params, fixed_cardinality=True)
    for size in range(1, min(k, len(pool)) + 1):
        for subset in combinations(pool, size):
            value = reduction_objective(subset, params, fixed_cardinality=True)
            if value > best_value:
                best, best_value = list(subset), value
    return best, best_value


def select_packing(
    pool: Sequence[Pack],
    dataset: LabeledDataset,
    params: EncodingParams,
    seed: int,
    k_cap: int = 25,
    workers: int = 1,
    logger: Optional[logging.Logger] = None
) -> SelectionResult:
    """
    扫描 K = 0..min(a, |E|, k_cap)，返回 R_ℓ 最大的 packing

    K = 0 对应空 packing；每个 K 使用独立种子 seed + K。
    best_K 为最终 packing 的实际大小。

    per_K_trace 中 K 对应的值是 R_ℓ(S_K)，基数项取 log*|S_K| 而不是 log* K：
    选中的哑元不计入 S_K，所以 |S_K| 可能小于 K。这样 trace 的每一项都等于
    对应 packing 真实的编码节省，最大值与 objective_value 一致

    Args:
        pool: 候选 pack
        dataset: 数据集
        params: 编码参数
        seed: 随机种子
        k_cap: K 的上限
        workers: 并行线程数
        logger: 日志记录器

    Returns:
        选择结果
    """
    logger = logger or logging.getLogger(__name__)
    upper = min(dataset.a, len(pool))
    if upper > k_cap:
        logger.warning(f"K 的扫描范围被截断: {upper} -> {k_cap}")
        upper = k_cap

    trace: List[Tuple[int, float]] = [(0, reduction_objective([], params))]
    candidates: List[List[Pack]] = [[]]

    if upper >= 1:
        table = CoverageTable(pool, params)

        def run(k: int) -> List[Pack]:
            return [pool[i] for i in table.random_greedy(k, seed + k)]

        ks = list(range(1, upper + 1))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                packings = list(executor.map(run, ks))
        else:
            packings = [run(k) for k in ks]

        for k, packing in zip(ks, packings):
            trace.append((k, reduction_objective(packing, params)))
            candidates.append(packing)

    best_index = int(np.argmax([value for _, value in trace]))
    packing = candidates[best_index]
    logger.info(
        f"选择完成: 扫描 K <= {upper}, 最优 K = {len(packing)}, "
        f"R_ℓ = {trace[best_index][1]:.2f} bits"
    )
    return SelectionResult(
        best_K=len(packing),
        packing=packing,
        objective_value=trace[best_index][1],
        per_K_trace=trace,
        seed=seed,
    )
