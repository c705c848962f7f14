"""
packing 选择测试
"""
import numpy as np
import pytest

from anomaly_pattern_explainer.errors import InputError
from anomaly_pattern_explainer.mdl import EncodingParams, reduction_objective
from anomaly_pattern_explainer.selection import (
    brute_force_select,
    random_greedy,
    select_packing,
)

from conftest import make_dataset, make_pack


@pytest.fixture
def dataset():
    rng = np.random.default_rng(0)
    return make_dataset(rng.uniform(size=(70, 4)), [1] * 30 + [0] * 40)


def disjoint_pool():
    return [
        make_pack("a", range(0, 5)),
        make_pack("b", range(5, 10)),
        make_pack("c", range(10, 15)),
    ]


class TestRandomGreedy:
    def test_dominant_pack_is_always_chosen(self, dataset):
        pool = [make_pack("big", range(12))] + [make_pack(f"s{i}", [20 + i]) for i in range(5)]
        params = EncodingParams.for_pool(dataset, pool)

        for seed in range(20):
            chosen = random_greedy(pool, 1, params, seed)
            assert [p.key for p in chosen] == ["big"]

    def test_returns_distinct_pool_members(self, dataset):
        pool = disjoint_pool()
        params = EncodingParams.for_pool(dataset, pool)

        for seed in range(20):
            chosen = random_greedy(pool, 3, params, seed)
            keys = [p.key for p in chosen]
            assert 1 <= len(keys) <= 3
            assert len(set(keys)) == len(keys)
            assert set(keys) <= {"a", "b", "c"}

    def test_brute_force_takes_every_disjoint_pack(self, dataset):
        pool = disjoint_pool()
        params = EncodingParams.for_pool(dataset, pool)

        best, value = brute_force_select(pool, 3, params)

        assert [p.key for p in best] == ["a", "b", "c"]
        assert value == pytest.approx(reduction_objective(best, params, fixed_cardinality=True))

    def test_is_deterministic_per_seed(self, dataset):
        rng = np.random.default_rng(1)
        pool = [make_pack(f"p{i}", rng.choice(30, size=4, replace=False)) for i in range(10)]
        params = EncodingParams.for_pool(dataset, pool)

        first = [p.key for p in random_greedy(pool, 4, params, 9)]
        second = [p.key for p in random_greedy(pool, 4, params, 9)]

        assert first == second

    def test_pads_with_dummies_when_pool_is_short(self, dataset):
        pool = [make_pack("only", range(5))]
        params = EncodingParams.for_pool(dataset, pool)

        sizes = {len(random_greedy(pool, 2, params, seed)) for seed in range(40)}

        assert sizes == {0, 1}

    def test_no_dummy_while_enough_packs_remain(self, dataset):
        pool = disjoint_pool()
        params = EncodingParams.for_pool(dataset, pool)

        for seed in range(20):
            assert len(random_greedy(pool, 2, params, seed)) == 2

    @pytest.mark.parametrize("fixture_seed", [0, 1, 2])
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_quality_against_brute_force(self, dataset, fixture_seed, k):
        rng = np.random.default_rng(fixture_seed)
        pool = [
            make_pack(
                f"p{i}",
                rng.choice(30, size=int(rng.integers(1, 8)), replace=False),
                normals=rng.choice(np.arange(30, 70), size=int(rng.integers(0, 4)), replace=False),
            )
            for i in range(12)
        ]
        params = EncodingParams.for_pool(dataset, pool)
        _, optimum = brute_force_select(pool, k, params)

        values = [
            reduction_objective(random_greedy(pool, k, params, seed), params, fixed_cardinality=True)
            for seed in range(50)
        ]

        assert np.mean(values) >= 0.356 * optimum

    def test_rejects_invalid_arguments(self, dataset):
        pool = disjoint_pool()
        params = EncodingParams.for_pool(dataset, pool)
        with pytest.raises(InputError):
            random_greedy(pool, 0, params, 0)
        with pytest.raises(InputError):
            random_greedy([], 1, params, 0)

    def test_brute_force_pool_limit(self, dataset):
        pool = [make_pack(f"p{i}", [i]) for i in range(21)]
        params = EncodingParams.for_pool(dataset, pool)
        with pytest.raises(InputError):
            brute_force_select(pool, 2, params)


class TestSelectPacking:
    def test_trace_and_best_value_agree(self, dataset):
        rng = np.random.default_rng(3)
        pool = [make_pack(f"p{i}", rng.choice(30, size=5, replace=False)) for i in range(8)]
        params = EncodingParams.for_pool(dataset, pool)

        result = select_packing(pool, dataset, params, seed=42)

        ks = [k for k, _ in result.per_K_trace]
        assert ks == list(range(0, 9))
        assert result.per_K_trace[0][1] == params.candidate_pool_cost
        assert result.objective_value == max(v for _, v in result.per_K_trace)
        assert result.objective_value == pytest.approx(reduction_objective(result.packing, params))
        assert result.best_K == len(result.packing)
        assert result.seed == 42

    def test_trace_entries_score_the_returned_packings(self, dataset):
        rng = np.random.default_rng(7)
        pool = [make_pack(f"p{i}", rng.choice(30, size=4, replace=False)) for i in range(6)]
        params = EncodingParams.for_pool(dataset, pool)

        result = select_packing(pool, dataset, params, seed=5)

        for k, value in result.per_K_trace[1:]:
            packing = random_greedy(pool, k, params, 5 + k)
            # 基数项按实际选中的 pack 数计
            assert value == pytest.approx(reduction_objective(packing, params))

    def test_disjoint_patterns_are_all_kept(self, dataset):
        pool = disjoint_pool()
        params = EncodingParams.for_pool(dataset, pool)

        result = select_packing(pool, dataset, params, seed=0)

        assert result.best_K >= 2
        assert set(p.key for p in result.packing) <= {"a", "b", "c"}
        assert result.objective_value > result.per_K_trace[1][1]

    def test_empty_pool_selects_nothing(self, dataset):
        params = EncodingParams.for_pool(dataset, [])

        result = select_packing([], dataset, params, seed=0)

        assert result.best_K == 0
        assert result.packing == []
        assert result.per_K_trace == [(0, 0.0)]
        assert result.objective_value == 0.0

    def test_k_cap_limits_sweep(self, dataset, caplog):
        pool = [make_pack(f"p{i}", [2 * i, 2 * i + 1]) for i in range(6)]
        params = EncodingParams.for_pool(dataset, pool)

        with caplog.at_level("WARNING"):
            result = select_packing(pool, dataset, params, seed=0, k_cap=2)

        assert [k for k, _ in result.per_K_trace] == [0, 1, 2]
        assert result.best_K <= 2
        assert "截断" in caplog.text

    def test_workers_do_not_change_result(self, dataset):
        rng = np.random.default_rng(4)
        pool = [make_pack(f"p{i}", rng.choice(30, size=4, replace=False)) for i in range(10)]
        params = EncodingParams.for_pool(dataset, pool)

        serial = select_packing(pool, dataset, params, seed=5, workers=1)
        parallel = select_packing(pool, dataset, params, seed=5, workers=4)

        assert serial.per_K_trace == parallel.per_K_trace
        assert [p.key for p in serial.packing] == [p.key for p in parallel.packing]

    def test_single_cheap_pattern_gives_one_pack(self, dataset):
        pool = [make_pack("all", range(30))] + [make_pack(f"s{i}", [i]) for i in range(4)]
        params = EncodingParams.for_pool(dataset, pool)

        result = select_packing(pool, dataset, params, seed=1)

        assert result.best_K == 1
        assert [p.key for p in result.packing] == ["all"]

    def test_worthless_packs_give_empty_packing(self, dataset):
        # 二维 pack 的代价超过单个异常点的 40 bits
        pool = [make_pack(f"w{i}", [i], subspace=(0, 1)) for i in range(5)]
        params = EncodingParams.for_pool(dataset, pool)

        result = select_packing(pool, dataset, params, seed=0)

        assert result.best_K == 0
        assert result.objective_value == params.candidate_pool_cost


class TestBruteForce:
    def test_prefers_widest_coverage(self, dataset):
        pool = [
            make_pack("p1", [1, 2, 3]),
            make_pack("p2", [3, 4]),
            make_pack("p3", [1, 2, 3, 4]),
        ]
        params = EncodingParams.for_pool(dataset, pool)

        best, _ = brute_force_select(pool, 1, params)

        assert [p.key for p in best] == ["p3"]

    def test_empty_pool(self, dataset):
        params = EncodingParams.for_pool(dataset, [])

        best, value = brute_force_select([], 3, params)

        assert best == []
        assert value == params.candidate_pool_cost

    def test_optimum_is_monotone_in_k(self, dataset):
        rng = np.random.default_rng(7)
        pool = [make_pack(f"p{i}", rng.choice(30, size=3, replace=False)) for i in range(8)]
        params = EncodingParams.for_pool(dataset, pool)

        values = [brute_force_select(pool, k, params)[1] for k in range(1, 6)]

        assert values == sorted(values)
