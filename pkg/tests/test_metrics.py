import math

import numpy as np
import pytest

from pdcont.errors import EmptyDiagram, InfinityMismatch, NotAcute
from pdcont.geometry import Configuration
from pdcont.metrics import (
    MAX_TRIANGLE_RATIO,
    bottleneck,
    bottleneck_exhaustive,
    diag_distance,
    hausdorff,
    triangle_ratio_check,
)
from pdcont.persistence import diagram

from helpers import random_acute_triangle, random_cloud

EX1_CLOUD = np.array([[0, 0, 0], [8, 0, 0], [5, 6, 0], [4, 2, 6]], dtype=float)


def _cfg(pts):
    return Configuration(np.asarray(pts, dtype=float), gauge=False)


class TestBottleneck:
    def test_identity(self):
        d = [(0.0, 2.0), (1.0, 3.0)]
        assert bottleneck(d, d) == 0.0

    def test_single_point_to_empty(self):
        assert bottleneck([(0.0, 2.0)], []) == pytest.approx(1.0, abs=1e-15)

    def test_simple_shift(self):
        assert bottleneck([(0.0, 2.0)], [(0.5, 2.0)]) == pytest.approx(0.5)

    def test_infinity_mismatch(self):
        with pytest.raises(InfinityMismatch):
            bottleneck([(0.0, math.inf)], [])

    def test_essential_matching(self):
        d1 = [(0.0, math.inf), (1.0, math.inf)]
        d2 = [(0.2, math.inf), (1.3, math.inf)]
        assert bottleneck(d1, d2) == pytest.approx(0.3)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.RandomState(5)
        for _ in range(50):
            n1, n2 = rng.randint(0, 4, size=2)
            d1 = [(b, b + g) for b, g in zip(rng.rand(n1), rng.rand(n1) + 0.01)]
            d2 = [(b, b + g) for b, g in zip(rng.rand(n2), rng.rand(n2) + 0.01)]
            assert bottleneck(d1, d2) == pytest.approx(
                bottleneck_exhaustive(d1, d2), abs=1e-14
            )

    def test_pseudometric_properties(self):
        rng = np.random.RandomState(9)
        for _ in range(20):
            ds = []
            for _ in range(3):
                n = rng.randint(1, 4)
                ds.append([(b, b + g) for b, g in zip(rng.rand(n), rng.rand(n) + 0.05)])
            a, b, c = ds
            assert bottleneck(a, b) == pytest.approx(bottleneck(b, a), abs=1e-12)
            assert bottleneck(a, c) <= bottleneck(a, b) + bottleneck(b, c) + 1e-12


class TestHausdorff:
    def test_identity(self):
        pts = np.random.RandomState(0).rand(6, 3)
        assert hausdorff(pts, pts) == 0.0

    def test_unit_shift(self):
        assert hausdorff([[0, 0, 0]], [[1, 0, 0]]) == pytest.approx(1.0)

    def test_bounded_by_euclidean(self):
        rng = np.random.RandomState(3)
        for _ in range(100):
            m = rng.randint(2, 8)
            p = random_cloud(rng, m)
            q = p + rng.randn(m, 3) * 0.1
            assert hausdorff(p, q) <= np.linalg.norm((p - q).ravel()) + 1e-12


class TestDiagDistance:
    def test_simple(self):
        assert diag_distance([(0.0, 2.0)]) == pytest.approx(1.0)

    def test_example1_value(self):
        pd = diagram(Configuration(EX1_CLOUD), "alpha", 2, 0.0)
        delta = diag_distance([(p.birth, p.death) for p in pd.finite])
        assert delta == pytest.approx((4.59015 - 4.42719) / 2, abs=5e-5)

    def test_near_diagonal(self):
        eps = 1e-7
        assert diag_distance([(1.0, 1.0 + 2 * eps)]) == pytest.approx(eps, rel=1e-9)

    def test_empty_raises(self):
        with pytest.raises(EmptyDiagram):
            diag_distance([])
        with pytest.raises(EmptyDiagram):
            diag_distance([(0.0, math.inf)])


class TestTriangleRatio:
    def test_equilateral_attains_bound(self):
        side = 2.0
        pts = [[0, 0, 0], [side, 0, 0], [side / 2, side * math.sqrt(3) / 2, 0]]
        b, d, ratio = triangle_ratio_check(pts)
        assert b == pytest.approx(1.0, abs=1e-12)
        assert ratio == pytest.approx(MAX_TRIANGLE_RATIO, abs=1e-12)

    def test_right_triangle_rejected_and_empty(self):
        pts = [[0, 0, 0], [3, 0, 0], [0, 4, 0]]
        with pytest.raises(NotAcute):
            triangle_ratio_check(pts)
        pd = diagram(_cfg(pts), "alpha", 1, 0.0)
        assert len(pd.finite) == 0

    def test_random_acute_triangles_obey_bound(self):
        rng = np.random.RandomState(77)
        for _ in range(200):
            pts = random_acute_triangle(rng)
            _, _, ratio = triangle_ratio_check(pts)
            assert ratio <= MAX_TRIANGLE_RATIO + 1e-12


class TestStability:
    def test_alpha_bottleneck_vs_hausdorff(self):
        rng = np.random.RandomState(15)
        for _ in range(40):
            m = rng.randint(4, 8)
            p = random_cloud(rng, m)
            q = p + rng.uniform(-1, 1, (m, 3)) * 0.01
            for dim in (0, 1, 2):
                dp = diagram(_cfg(p), "alpha", dim, 0.0)
                dq = diagram(_cfg(q), "alpha", dim, 0.0)
                pairs_p = [(x.birth, x.death) for x in dp.finite]
                pairs_p += [(e.birth, math.inf) for e in dp.essential]
                pairs_q = [(x.birth, x.death) for x in dq.finite]
                pairs_q += [(e.birth, math.inf) for e in dq.essential]
                assert bottleneck(pairs_p, pairs_q) <= hausdorff(p, q) + 1e-10
