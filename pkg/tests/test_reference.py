"""The reference implementations themselves: explicit quadtree, brute
Voronoi, generators, checkers."""

from fractions import Fraction

import pytest

from conftest import jittered_net, random_points
from pqc.errors import DuplicatePointError, GenerationError
from pqc.morton import Config
from pqc.reference import (
    EpsilonNetSpec,
    ExplicitQuadtree,
    brute_voronoi,
    check_well_spaced,
    generate_epsilon_net,
    quadtree_superset,
)


class TestExplicitQuadtree:
    def test_two_corner_points(self):
        cfg = Config(d=2, w=3, gamma=0)
        tree = ExplicitQuadtree([(0, 0), (7, 7)], cfg)
        assert tree.leaf_height((0, 0)) == 1
        assert tree.leaf_height((7, 7)) == 1

    def test_single_point_root_leaf(self):
        cfg = Config(d=2, w=4, gamma=0)
        tree = ExplicitQuadtree([(3, 3)], cfg)
        assert tree.leaf_height((3, 3)) == cfg.w

    def test_leaves_partition_domain(self):
        cfg = Config(d=2, w=5, gamma=0)
        pts = random_points(cfg, 3, 7)
        tree = ExplicitQuadtree(pts, cfg)
        area = sum((1 << h) ** 2 for h in tree.leaves.values())
        assert area == 1 << (2 * cfg.w)

    def test_balanced_variant_obeys_two_to_one(self):
        cfg = Config(d=2, w=6, gamma=0)
        pts = [(1, 1), (62, 62), (40, 9)]
        tree = ExplicitQuadtree(pts, cfg, enforce_balance=True)
        for corner, h in tree.leaves.items():
            side = 1 << h
            from pqc.morton import TrieSquare

            for nc in tree._neighbour_corners(TrieSquare(corner, h)):
                assert tree._leaf_height_at(nc) >= h - 1

    def test_duplicates_rejected(self):
        cfg = Config(d=2, w=4, gamma=0)
        with pytest.raises(DuplicatePointError):
            ExplicitQuadtree([(1, 1), (1, 1)], cfg)


class TestBruteVoronoi:
    CFG = Config(d=2, w=5, gamma=0)
    PLUS = [(8, 8), (0, 8), (16, 8), (8, 0), (8, 16)]

    def test_plus_shape_center_cell(self):
        cell = brute_voronoi(self.PLUS, (8, 8), self.CFG)
        assert sorted(cell.polygon) == [
            (Fraction(4), Fraction(4)),
            (Fraction(4), Fraction(12)),
            (Fraction(12), Fraction(4)),
            (Fraction(12), Fraction(12)),
        ]
        assert cell.neighbors == sorted(self.PLUS[1:])
        assert cell.aspect_sq == Fraction(1, 2)

    def test_two_points_split_domain(self):
        cfg = Config(d=2, w=4, gamma=0)
        cell = brute_voronoi([(3, 7), (11, 7)], (3, 7), cfg)
        # bisector x = 7 against the box [0, 15]^2
        assert sorted(cell.polygon) == [
            (Fraction(0), Fraction(0)),
            (Fraction(0), Fraction(15)),
            (Fraction(7), Fraction(0)),
            (Fraction(7), Fraction(15)),
        ]

    def test_cells_tile_domain(self):
        cfg = Config(d=2, w=6, gamma=0)
        pts = random_points(cfg, 8, 12)
        total = sum(brute_voronoi(pts, p, cfg).area for p in pts)
        assert total == Fraction(cfg.coord_max) ** 2


class TestGenerators:
    def test_zero_jitter_grid_is_well_spaced(self):
        cfg = Config(d=2, w=8, gamma=0)
        spec = EpsilonNetSpec(f0=32, epsilon=0.72, cols=8, rows=8)
        assert spec.jitter == 0
        pts = generate_epsilon_net(spec, cfg, seed=0)
        ok, _, worst = check_well_spaced(pts, Fraction(2), cfg)
        assert ok

    def test_filled_net_passes_checker(self):
        cfg = Config(d=2, w=9, gamma=0)
        for seed in range(3):
            pts = jittered_net(cfg, seed, f0=32)
            ok, worst_p, worst = check_well_spaced(pts, Fraction(2), cfg)
            assert ok, (worst_p, worst)

    def test_spacing_floor_holds(self):
        cfg = Config(d=2, w=10, gamma=0)
        pts = jittered_net(cfg, 9, f0=48)
        pts = sorted(pts)
        f0_sq = 48 * 48
        for i, p in enumerate(pts):
            for q in pts[i + 1 : i + 40]:
                d2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
                assert d2 >= f0_sq

    def test_determinism(self):
        cfg = Config(d=2, w=9, gamma=0)
        assert jittered_net(cfg, 5, f0=32) == jittered_net(cfg, 5, f0=32)

    def test_adversarial_pair_fails_checker(self):
        cfg = Config(d=2, w=10, gamma=0)
        ok, worst_p, worst = check_well_spaced([(1, 1), (2, 1)], Fraction(2), cfg)
        assert not ok
        assert worst > 4

    def test_epsilon_floor_rejected(self):
        with pytest.raises(GenerationError):
            EpsilonNetSpec(f0=16, epsilon=0.5, cols=4, rows=4)

    def test_superset_contains_inputs(self):
        cfg = Config(d=2, w=8, gamma=0)
        pts = [(10, 20), (200, 180), (40, 210)]
        sup = quadtree_superset(pts, cfg)
        assert set(pts) <= set(sup)
        assert len(sup) > len(pts)
