"""
细化子包测试：线性规划、椭球转换、特征规则、邻域与 Pareto 前沿
"""
import numpy as np
import pytest

from anomaly_pattern_explainer.density import Interval
from anomaly_pattern_explainer.errors import EmptyEllipsoidError, InputError
from anomaly_pattern_explainer.lattice import HyperRectangle
from anomaly_pattern_explainer.refine import (
    BoundaryParams,
    RectangleRefiner,
    feature_rules,
    filter_vicinity,
    fit_boundary,
    make_pack,
    pareto_frontier,
    refine_rectangle,
    to_ellipsoid,
)

from conftest import make_dataset, make_pack as pack_with

U_GRID = [-1, -2, -4, -8, -10, -16, -20, -50, -100]
W_GRID = np.arange(-200, 200.5, 0.5)


def grid_oracle(x_i, x_j, x_l, alpha, lambda_):
    """一维情形：在 (u, w) 网格上对 w0 的所有断点求目标的最小值"""
    x_i, x_j, x_l = (np.asarray(v, dtype=float) for v in (x_i, x_j, x_l))
    best = np.inf
    for u in U_GRID:
        for w in W_GRID:
            base_i = u * x_i ** 2 + w * x_i
            base_j = u * x_j ** 2 + w * x_j
            base_l = u * x_l ** 2 + w * x_l
            breakpoints = np.concatenate([1 - base_i, 1 - base_j, -1 - base_l])
            w0 = breakpoints[:, None]
            cost = (
                np.maximum(0, 1 - (base_i + w0)).sum(axis=1)
                + alpha * np.maximum(0, 1 - (base_j + w0)).sum(axis=1)
                + lambda_ * np.maximum(0, base_l + w0 + 1).sum(axis=1)
            )
            best = min(best, float(cost.min()))
    return best


def assert_feasible(fit, x_i, x_j, x_l):
    params = fit.params
    assert np.all(params.u <= -1 + 1e-9)
    assert np.all(fit.slack_i >= 0) and np.all(fit.slack_j >= 0) and np.all(fit.slack_l >= 0)
    if len(x_i):
        assert np.all(params.evaluate(x_i) >= 1 - fit.slack_i - 1e-6)
    if len(x_j):
        assert np.all(params.evaluate(x_j) >= 1 - fit.slack_j - 1e-6)
    if len(x_l):
        assert np.all(params.evaluate(x_l) <= -1 + fit.slack_l + 1e-6)


class TestFitBoundary:
    @pytest.mark.parametrize(
        "x_i, x_j, x_l, alpha, lambda_, expected",
        [
            ([0.5], [], [0.0, 1.0], 1.0, 1.0, 0.0),
            ([0.5], [], [0.5], 1.0, 0.1, 0.2),
            ([0.2, 0.8], [], [0.5], 1.0, 1.0, 2.09),
            ([0.3, 0.4], [], [], 1.0, 1.0, 0.0),
            ([0.5], [0.9], [0.2], 0.01, 1.0, None),
        ],
    )
    def test_matches_grid_oracle(self, x_i, x_j, x_l, alpha, lambda_, expected):
        fit = fit_boundary(
            np.array(x_i).reshape(-1, 1),
            np.array(x_j).reshape(-1, 1),
            np.array(x_l).reshape(-1, 1),
            alpha,
            lambda_,
        )

        oracle = grid_oracle(x_i, x_j, x_l, alpha, lambda_)
        assert fit.objective <= oracle + 1e-3
        assert fit.objective == pytest.approx(oracle, abs=1e-3)
        if expected is not None:
            assert fit.objective == pytest.approx(expected, abs=1e-3)

    def test_solution_satisfies_constraints(self):
        rng = np.random.default_rng(4)
        x_i = rng.uniform(0.4, 0.6, size=(6, 2))
        x_j = rng.uniform(0.2, 0.8, size=(4, 2))
        x_l = rng.uniform(0.0, 1.0, size=(15, 2))

        fit = fit_boundary(x_i, x_j, x_l, 0.1, 10.0, subspace=(1, 3))

        assert fit.params.subspace == (1, 3)
        assert_feasible(fit, x_i, x_j, x_l)
        expected = fit.slack_i.sum() + 0.1 * fit.slack_j.sum() + 10.0 * fit.slack_l.sum()
        assert fit.objective == pytest.approx(expected)

    def test_separable_points_need_no_slack(self):
        x_i = np.array([[0.45], [0.5], [0.55]])
        x_l = np.array([[0.1], [0.9]])

        fit = fit_boundary(x_i, None, x_l, 1.0, 1.0)

        assert fit.objective == pytest.approx(0.0, abs=1e-6)
        assert np.all(fit.params.evaluate(x_i) >= 1 - 1e-6)
        assert np.all(fit.params.evaluate(x_l) <= -1 + 1e-6)

    def test_raising_lambda_never_adds_normal_slack(self):
        rng = np.random.default_rng(9)
        x_i = rng.uniform(0.35, 0.65, size=(10, 2))
        x_j = rng.uniform(0.2, 0.8, size=(6, 2))
        x_l = rng.uniform(0.0, 1.0, size=(30, 2))

        sums = [
            fit_boundary(x_i, x_j, x_l, 0.1, lambda_).slack_l.sum()
            for lambda_ in (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
        ]

        for earlier, later in zip(sums, sums[1:]):
            assert later <= earlier + 1e-4 * max(1.0, earlier)

    def test_rejects_empty_inside_set(self):
        with pytest.raises(InputError):
            fit_boundary(np.empty((0, 1)), None, None, 1.0, 1.0)

    def test_rejects_non_positive_penalty(self):
        with pytest.raises(InputError):
            fit_boundary(np.array([[0.5]]), None, None, 0.0, 1.0)


class TestEllipsoid:
    def test_converts_known_parameters(self):
        params = BoundaryParams(u=np.array([-4.0]), w=np.array([8.0]), w0=-3.0, subspace=(0,))

        center, inv_shape, radii = to_ellipsoid(params)

        assert center.tolist() == pytest.approx([1.0])
        assert inv_shape.tolist() == pytest.approx([4.0])
        assert radii.tolist() == pytest.approx([0.5])

    def test_boundary_points_have_zero_score(self):
        params = BoundaryParams(
            u=np.array([-3.0, -12.0]), w=np.array([2.4, 9.6]), w0=-1.0, subspace=(0, 1)
        )
        center, _, radii = to_ellipsoid(params)

        for z in range(2):
            for sign in (-1, 1):
                point = center.copy()
                point[z] += sign * radii[z]
                assert params.evaluate(point)[0] == pytest.approx(0.0, abs=1e-6)
        assert params.evaluate(center)[0] > 0

    def test_sign_agrees_with_ellipsoid_form(self):
        rng = np.random.default_rng(10)

        for dim in (1, 2, 3):
            center = rng.uniform(0.2, 0.8, dim)
            u = -rng.uniform(1.0, 60.0, dim)
            s = rng.uniform(0.05, 3.0)
            params = BoundaryParams(
                u=u, w=-2 * u * center, w0=s + float(np.sum(u * center ** 2)), subspace=tuple(range(dim))
            )
            c, inv_shape, _ = to_ellipsoid(params)
            points = rng.uniform(-0.2, 1.2, size=(1000, dim))

            h = params.evaluate(points)
            q = ((points - c) ** 2) @ inv_shape
            clear = (np.abs(h) > 1e-9) & (np.abs(q - 1) > 1e-9)
            assert np.array_equal((h >= 0)[clear], (q <= 1)[clear])

    def test_empty_ellipsoid_raises(self):
        params = BoundaryParams(u=np.array([-1.0]), w=np.array([0.0]), w0=-1.0, subspace=(0,))

        with pytest.raises(EmptyEllipsoidError):
            to_ellipsoid(params)

    def test_rejects_shallow_curvature(self):
        with pytest.raises(ValueError):
            BoundaryParams(u=np.array([-0.5]), w=np.array([0.0]), w0=1.0, subspace=(0,))


class TestFeatureRules:
    def test_interval_from_center_and_radius(self):
        pack = pack_with("p", [0], center=[0.82], radii=[0.16])

        rule = feature_rules(pack).rules[0]

        assert rule.lower == pytest.approx(0.66)
        assert rule.upper == pytest.approx(0.98)

    def test_interval_is_clipped_to_unit_range(self):
        pack = pack_with("p", [0], center=[0.04], radii=[0.07])

        rule = feature_rules(pack).rules[0]

        assert rule.lower == 0.0
        assert rule.upper == pytest.approx(0.11)

    def test_raw_units_use_normalization_record(self):
        pack = pack_with("p", [0], subspace=(1,), center=[0.5], radii=[0.25])
        record = np.array([[0.0, 1.0], [100.0, 300.0]])

        rule = feature_rules(pack, record, ["a", "b"]).rules[0]

        assert rule.name == "b"
        assert rule.raw_lower == pytest.approx(150.0)
        assert rule.raw_upper == pytest.approx(250.0)
        assert rule.raw_center == pytest.approx(200.0)

    def test_tiny_radius_is_degenerate(self, caplog):
        pack = pack_with("p", [0], center=[0.5], radii=[0.001])

        with caplog.at_level("WARNING"):
            rule = feature_rules(pack).rules[0]

        assert rule.degenerate
        assert rule.lower == rule.upper == pytest.approx(0.5)
        assert "退化" in caplog.text

    def test_signature_carries_counts(self):
        pack = pack_with("p", [1, 2, 3], normals=[7], subspace=(0, 2), center=[0.3, 0.6], radii=[0.1, 0.2])

        signature = feature_rules(pack)

        assert (signature.mass, signature.impurity) == (3, 1)
        assert [r.feature for r in signature.rules] == [0, 2]


def one_dim_dataset():
    points = [[0.45], [0.5], [0.55], [0.1], [0.2], [0.8], [0.9], [0.0], [1.0]]
    labels = [1, 1, 1, 0, 0, 0, 0, 0, 0]
    return make_dataset(points, labels)


class TestVicinity:
    def test_splits_points_by_expanded_box(self):
        points = [[0.5], [0.7], [0.9], [0.3], [0.95]]
        dataset = make_dataset(points, [1, 1, 1, 0, 0])
        rect = HyperRectangle(sides=((0, Interval(0.4, 0.6)),))

        vicinity = filter_vicinity(rect, dataset, margin=1.0)

        assert vicinity.inside_anomalies.tolist() == [0]
        assert vicinity.near_anomalies.tolist() == [1]
        assert vicinity.near_normals.tolist() == [3]

    def test_zero_margin_keeps_only_the_box(self):
        points = [[0.5], [0.7], [0.45]]
        dataset = make_dataset(points, [1, 1, 0])
        rect = HyperRectangle(sides=((0, Interval(0.4, 0.6)),))

        vicinity = filter_vicinity(rect, dataset, margin=0.0)

        assert vicinity.near_anomalies.size == 0
        assert vicinity.near_normals.tolist() == [2]


class TestParetoFrontier:
    def test_keeps_non_dominated_packs(self):
        packs = [
            pack_with("a", range(5)),
            pack_with("b", range(5), normals=[10]),
            pack_with("c", range(3)),
            pack_with("d", range(6), normals=[10, 11]),
            pack_with("e", range(5)),
        ]

        frontier = pareto_frontier(packs)

        assert [p.key for p in frontier] == ["a", "d"]

    def test_frontier_is_mutually_non_dominated(self):
        rng = np.random.default_rng(0)
        packs = [
            pack_with(f"p{i}", range(int(rng.integers(1, 10))), normals=range(int(rng.integers(0, 5))))
            for i in range(30)
        ]

        frontier = pareto_frontier(packs)

        for p in frontier:
            for q in frontier:
                if p is q:
                    continue
                dominates = (q.mass >= p.mass and q.impurity <= p.impurity
                             and (q.mass > p.mass or q.impurity < p.impurity))
                assert not dominates


class TestRectangleRefiner:
    def test_refines_a_clean_cluster(self):
        dataset = one_dim_dataset()
        rect = HyperRectangle(sides=((0, Interval(0.45, 0.55)),))

        packs = refine_rectangle(
            rect, dataset, alpha_grid=[1e-3, 1.0], lambda_grid=[1.0, 100.0], margin=5.0
        )

        assert packs
        best = max(packs, key=lambda p: p.mass)
        assert best.covered_anomalies.tolist() == [0, 1, 2]
        assert best.impurity == 0

    def test_membership_matches_recount(self):
        dataset = one_dim_dataset()
        rect = HyperRectangle(sides=((0, Interval(0.45, 0.55)),))
        refiner = RectangleRefiner(dataset, alpha_grid=[1e-2], lambda_grid=[0.1, 10.0])

        outcome = refiner.refine(rect, rect_index=7)

        assert outcome.cells == 2
        assert outcome.packs
        for pack in outcome.packs:
            inside = pack.membership(dataset.points)
            assert np.flatnonzero(inside & dataset.is_anomaly).tolist() == pack.covered_anomalies.tolist()
            assert np.flatnonzero(inside & ~dataset.is_anomaly).tolist() == pack.enclosed_normals.tolist()
            assert pack.key.startswith("r7-")
            assert pack.provenance.rect_index == 7
            assert np.all(pack.score(dataset.points[pack.covered_anomalies]) >= 0)

    def test_distant_normals_keep_the_pack_local(self):
        # margin=0：线性规划起初不带任何正常点
        dataset = one_dim_dataset()
        rect = HyperRectangle(sides=((0, Interval(0.45, 0.55)),))
        refiner = RectangleRefiner(dataset, alpha_grid=[1.0], lambda_grid=[1e-3, 1.0], margin=0.0)

        outcome = refiner.refine(rect)

        assert outcome.packs
        for pack in outcome.packs:
            assert pack.covered_anomalies.tolist() == [0, 1, 2]
            assert pack.impurity == 0
            assert pack.radii[0] < 0.5
            assert np.all(pack.score(dataset.points[dataset.normal_ids]) < 0)

    def test_every_normal_outside_the_lp_satisfies_its_constraint(self):
        rng = np.random.default_rng(12)
        points = rng.uniform(size=(300, 2))
        labels = np.zeros(300, dtype=bool)
        points[:30] = rng.uniform(0.45, 0.55, size=(30, 2))
        labels[:30] = True
        dataset = make_dataset(points, labels)
        rect = HyperRectangle(sides=((0, Interval(0.45, 0.55)), (1, Interval(0.45, 0.55))))
        refiner = RectangleRefiner(dataset, margin=0.5)
        vicinity = filter_vicinity(rect, dataset, margin=0.5)
        local = dataset.points[:, [0, 1]]
        distance = np.zeros(dataset.m)

        for lambda_ in (1e-3, 1.0):
            fit, active, _ = refiner.fit_cell(
                local[vicinity.inside_anomalies], local[vicinity.near_anomalies],
                local, vicinity.near_normals, distance, 1.0, lambda_, (0, 1),
            )
            outside = np.setdiff1d(dataset.normal_ids, active)
            assert np.all(fit.params.evaluate(local[outside]) <= -1 + 1e-6)

    def test_impure_packs_are_dropped_under_a_cap(self):
        points = [[0.45], [0.5], [0.55], [0.48], [0.52], [0.0], [1.0]]
        dataset = make_dataset(points, [1, 1, 1, 0, 0, 0, 0])
        rect = HyperRectangle(sides=((0, Interval(0.45, 0.55)),))

        capped = RectangleRefiner(
            dataset, alpha_grid=[1.0], lambda_grid=[1e-3, 1e3], margin=1.0, purity_cap=0
        ).refine(rect)
        uncapped = RectangleRefiner(
            dataset, alpha_grid=[1.0], lambda_grid=[1e-3, 1e3], margin=1.0
        ).refine(rect)

        assert capped.impure_cells >= 1
        assert all(p.impurity == 0 for p in capped.packs)
        assert any(p.impurity > 0 for p in uncapped.packs)

    def test_coefficient_bound_hits_are_counted(self, caplog):
        points = [[0.5], [0.5002], [0.4998], [0.0], [1.0]]
        dataset = make_dataset(points, [1, 0, 0, 0, 0])
        rect = HyperRectangle(sides=((0, Interval(0.4999, 0.5001)),))
        refiner = RectangleRefiner(dataset, alpha_grid=[1.0], lambda_grid=[1e3], margin=5.0)

        with caplog.at_level("WARNING"):
            outcome = refiner.refine(rect)

        assert outcome.bound_hits == 1
        assert "触及上界" in caplog.text

    def test_rectangle_without_anomalies_is_skipped(self):
        dataset = one_dim_dataset()
        rect = HyperRectangle(sides=((0, Interval(0.05, 0.25)),))

        outcome = RectangleRefiner(dataset).refine(rect)

        assert outcome.packs == []
        assert outcome.cells == 0

    def test_make_pack_counts_members(self):
        dataset = one_dim_dataset()
        params = BoundaryParams(u=np.array([-100.0]), w=np.array([100.0]), w0=-24.0, subspace=(0,))

        pack = make_pack("k", params, dataset.points, dataset.is_anomaly)

        # 中心 0.5，半径 0.1
        assert pack.radii[0] == pytest.approx(0.1)
        assert pack.covered_anomalies.tolist() == [0, 1, 2]
        assert pack.enclosed_normals.size == 0
