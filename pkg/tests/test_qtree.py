"""Quadtree queries over Morton-sorted sources, checked against slow scans
and the materialised reference tree."""

import random
from fractions import Fraction

import pytest

from conftest import jittered_net, random_points
from pqc.errors import DimensionError, DomainError
from pqc.morton import Config, TrieSquare, clear_low_bits, interleave, square_contains
from pqc.qtree import (
    ArrayPointSource,
    VertexRange,
    is_crowded,
    restricted_voronoi,
    square_of,
    vertices,
)
from pqc.reference import ExplicitQuadtree, brute_voronoi, check_well_spaced

FIGURE_POINTS = [(5, 2), (6, 3), (8, 4), (9, 6), (10, 6)]
CFG5 = Config(d=2, w=5, gamma=0)


def scan_range(points, square):
    hits = [i for i, p in enumerate(points) if square_contains(square, p)]
    if not hits:
        return None
    return (hits[0], hits[-1] + 1)


def scan_crowded(points, square, cfg):
    from pqc.morton import neighbours

    inside = sum(square_contains(square, p) for p in points)
    if inside >= 2:
        return True
    if inside == 0:
        return False
    return any(
        any(square_contains(nb, p) for p in points) for nb in neighbours(square, cfg)
    )


class TestVertices:
    def test_figure_square(self):
        src = ArrayPointSource(FIGURE_POINTS, CFG5)
        assert vertices(TrieSquare((4, 0), 2), src) == VertexRange(0, 2)

    def test_root_holds_everything(self):
        src = ArrayPointSource(FIGURE_POINTS, CFG5)
        assert vertices(TrieSquare((0, 0), 5), src) == VertexRange(0, 5)

    def test_empty_square(self):
        src = ArrayPointSource(FIGURE_POINTS, CFG5)
        assert len(vertices(TrieSquare((0, 0), 2), src)) == 0

    def test_agrees_with_linear_scan(self):
        cfg = Config(d=2, w=8, gamma=0)
        rng = random.Random(3)
        for trial in range(30):
            pts = sorted(
                random_points(cfg, 1000 + trial, 40),
                key=lambda p: interleave(p, cfg),
            )
            src = ArrayPointSource(pts, cfg, presorted=True)
            for _ in range(20):
                h = rng.randrange(0, 9)
                corner = clear_low_bits(
                    (rng.randrange(256), rng.randrange(256)), h
                )
                if corner[0] + (1 << h) > 256 or corner[1] + (1 << h) > 256:
                    continue
                s = TrieSquare(corner, h)
                rng_got = vertices(s, src)
                expect = scan_range(pts, s)
                if expect is None:
                    assert len(rng_got) == 0
                else:
                    assert (rng_got.lo, rng_got.hi) == expect


class TestIsCrowded:
    CFG3 = Config(d=2, w=3, gamma=0)

    def test_root_with_two_points(self):
        src = ArrayPointSource([(0, 0), (7, 7)], self.CFG3)
        assert is_crowded(TrieSquare((0, 0), 3), src)

    def test_neighbour_makes_crowded(self):
        src = ArrayPointSource([(0, 0), (7, 7)], self.CFG3)
        assert is_crowded(TrieSquare((0, 0), 2), src)

    def test_isolated_is_uncrowded(self):
        src = ArrayPointSource([(0, 0), (7, 7)], self.CFG3)
        assert not is_crowded(TrieSquare((0, 0), 1), src)

    def test_agrees_with_scan(self):
        cfg = Config(d=2, w=6, gamma=0)
        rng = random.Random(17)
        for trial in range(20):
            pts = random_points(cfg, 400 + trial, 12)
            src = ArrayPointSource(pts, cfg)
            for _ in range(30):
                h = rng.randrange(0, 7)
                cx = rng.randrange(0, 64 - (1 << h) + 1)
                cy = rng.randrange(0, 64 - (1 << h) + 1)
                s = TrieSquare(clear_low_bits((cx, cy), h), h)
                assert is_crowded(s, src) == scan_crowded(pts, s, cfg)


class TestSquareOf:
    def test_two_corners(self):
        cfg = Config(d=2, w=3, gamma=0)
        src = ArrayPointSource([(0, 0), (7, 7)], cfg)
        assert square_of((0, 0), src, cfg) == TrieSquare((0, 0), 1)

    def test_single_point_gets_root(self):
        cfg = Config(d=2, w=3, gamma=0)
        src = ArrayPointSource([(3, 3)], cfg)
        assert square_of((3, 3), src, cfg) == TrieSquare((0, 0), 3)

    def test_figure_point_is_unit(self):
        src = ArrayPointSource(FIGURE_POINTS, CFG5)
        assert square_of((5, 2), src, CFG5) == TrieSquare((5, 2), 0)

    def test_adjacent_points_floor_at_unit(self):
        cfg = Config(d=2, w=6, gamma=0)
        src = ArrayPointSource([(1, 1), (2, 1)], cfg)
        s = square_of((1, 1), src, cfg)
        assert s.height == 0 and square_contains(s, (1, 1))

    def test_matches_explicit_tree(self):
        cfg = Config(d=2, w=8, gamma=0)
        for seed in range(25):
            pts = random_points(cfg, 7000 + seed, 25)
            src = ArrayPointSource(pts, cfg)
            tree = ExplicitQuadtree(pts, cfg)
            for p in pts:
                assert square_of(p, src, cfg).height == tree.leaf_height(p), (
                    seed,
                    p,
                )

    def test_result_properties(self):
        cfg = Config(d=2, w=8, gamma=0)
        for seed in range(10):
            pts = jittered_net(cfg, seed, f0=32)
            src = ArrayPointSource(pts, cfg)
            for p in pts:
                s = square_of(p, src, cfg)
                assert square_contains(s, p)
                # The crowding property: the side never exceeds any
                # inter-point distance from p.
                side_sq = (1 << s.height) ** 2
                for q in pts:
                    if q != p:
                        d2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
                        assert side_sq <= d2

    def test_monotone_under_descent(self):
        # If a square containing p is uncrowded, every smaller one is too:
        # the ordered height scan must show a crowded prefix then an
        # uncrowded suffix, never an alternation.
        cfg = Config(d=2, w=6, gamma=0)
        rng = random.Random(5)
        for seed in range(15):
            pts = random_points(cfg, 9000 + seed, 10)
            src = ArrayPointSource(pts, cfg)
            for _ in range(10):
                p = (rng.randrange(64), rng.randrange(64))
                flags = []
                for h in range(cfg.w + 1):
                    s = TrieSquare(clear_low_bits(p, h), h)
                    flags.append(is_crowded(s, src))
                # Uncrowded below, crowded above: the flags never step down.
                assert flags == sorted(flags)

    def test_rejects_out_of_domain(self):
        src = ArrayPointSource(FIGURE_POINTS, CFG5)
        with pytest.raises(DomainError):
            square_of((40, 2), src, CFG5)


class TestRestrictedVoronoi:
    PLUS = [(8, 8), (0, 8), (16, 8), (8, 0), (8, 16)]

    def test_plus_shape_cell(self):
        cfg = Config(d=2, w=5, gamma=0, rho=Fraction(2))
        src = ArrayPointSource(self.PLUS, cfg)
        cell = restricted_voronoi((8, 8), src, cfg)
        assert sorted(cell.neighbors) == sorted(self.PLUS[1:])
        assert sorted(cell.polygon) == [
            (Fraction(4), Fraction(4)),
            (Fraction(4), Fraction(12)),
            (Fraction(12), Fraction(4)),
            (Fraction(12), Fraction(12)),
        ]
        assert cell.aspect_sq == Fraction(1, 2)
        assert not cell.clip_bounded
        assert abs(cell.aspect - 0.7071) < 1e-4

    def test_two_point_cell_is_clip_bounded(self):
        cfg = Config(d=2, w=8, gamma=0, rho=Fraction(2))
        src = ArrayPointSource([(100, 100), (110, 100)], cfg)
        cell = restricted_voronoi((100, 100), src, cfg)
        assert cell.clip_bounded
        assert cell.neighbors == [(110, 100)]
        # Clamped at the clip radius: aspect equals beta exactly.
        assert cell.aspect_sq == (2 * cfg.rho) ** 2

    def test_matches_brute_force_on_well_spaced_sets(self):
        cfg = Config(d=2, w=9, gamma=0, rho=Fraction(2))
        checked = 0
        for seed in range(4):
            pts = jittered_net(cfg, 200 + seed, f0=48)
            ok, _, worst = check_well_spaced(pts, cfg.rho, cfg)
            assert ok, f"generator produced aspect^2 {worst}"
            src = ArrayPointSource(pts, cfg)
            for p in pts:
                cell = restricted_voronoi(p, src, cfg)
                ref = brute_voronoi(pts, p, cfg)
                assert not cell.clip_bounded
                assert sorted(cell.neighbors) == ref.neighbors
                assert sorted(cell.polygon) == sorted(ref.polygon)
                assert cell.aspect_sq == ref.aspect_sq
                assert cell.nn_sq == ref.nn_sq
                checked += 1
        assert checked >= 150

    def test_rejects_d3_cell_geometry(self):
        cfg = Config(d=3, w=5, gamma=0)
        src = ArrayPointSource([(1, 1, 1), (4, 4, 4)], cfg)
        with pytest.raises(DimensionError):
            restricted_voronoi((1, 1, 1), src, cfg)

    def test_square_scans_independent_of_n(self):
        # Quadrupling the point count (same local density, larger domain)
        # should not grow the per-query work.
        worst = {}
        for label, w in {"small": 9, "large": 10}.items():
            cfg = Config(d=2, w=w, gamma=0, rho=Fraction(2))
            pts = jittered_net(cfg, 7, f0=48)
            src = ArrayPointSource(pts, cfg)
            rng = random.Random(1)
            sample = rng.sample(pts, 30)
            worst[label] = max(
                restricted_voronoi(p, src, cfg).squares_scanned for p in sample
            )
        assert worst["large"] <= 2 * worst["small"] + 8
