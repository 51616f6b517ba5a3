"""Implicit balanced-quadtree queries over any Morton-sorted point sequence.

The operations here never materialise a tree.  They only need a
``PointSource``: something that can report its size, hand out the point at
a given rank, and find the rank of the first point whose Morton key is at
least a given key.  A plain sorted array and the compressed block store
both satisfy that contract, so every query below runs unchanged over
either.

A square is *crowded* when it holds two or more points, or holds exactly
one while some equal-size neighbour square is nonempty.  Crowdedness is
monotone along any root-to-leaf chain (an uncrowded square has only
uncrowded descendants), which is what makes the height search in
:func:`square_of` sound.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple, Sequence

from .errors import DimensionError, DuplicatePointError, PqcError, UnsortedInputError
from .morton import (
    Config,
    Point,
    TrieSquare,
    interleave,
    neighbours,
    square_key_range,
    square_of_point,
    validate_point,
)


class Counters:
    """Work counters exposed for complexity regression tests."""

    __slots__ = ("range_queries", "blocks_decoded", "squares_scanned")

    def __init__(self):
        self.reset()

    def reset(self):
        self.range_queries = 0
        self.blocks_decoded = 0
        self.squares_scanned = 0

    def snapshot(self) -> dict:
        return {
            "range_queries": self.range_queries,
            "blocks_decoded": self.blocks_decoded,
            "squares_scanned": self.squares_scanned,
        }


class VertexRange(NamedTuple):
    lo: int
    hi: int

    def __len__(self) -> int:
        return self.hi - self.lo


class PointSource:
    """Read interface over a Morton-sorted point sequence.

    Subclasses provide count / point_at / successor_rank; the rest has
    workable defaults.  ``query_context()`` may return a caching view whose
    lifetime is a single logical query; the default is the source itself.
    """

    cfg: Config
    counters: Counters

    def count(self) -> int:
        raise NotImplementedError

    def point_at(self, rank: int) -> Point:
        raise NotImplementedError

    def successor_rank(self, key: int) -> int:
        """Rank of the first point with Morton key >= key."""
        raise NotImplementedError

    def height_at(self, rank: int) -> int:
        """Stored leaf height, or 0 when the source does not track heights."""
        return 0

    @property
    def has_heights(self) -> bool:
        return False

    def iter_range(self, lo: int, hi: int) -> Iterator[Point]:
        for r in range(lo, hi):
            yield self.point_at(r)

    def query_context(self) -> "PointSource":
        return self


class ArrayPointSource(PointSource):
    """PointSource over an in-memory, Morton-sorted list of points."""

    def __init__(self, points: Sequence[Point], cfg: Config, heights=None, presorted=False):
        self.cfg = cfg
        pts = [validate_point(p, cfg) for p in points]
        if presorted:
            keys = [interleave(p, cfg) for p in pts]
        else:
            decorated = sorted(
                (interleave(p, cfg), p) for p in pts
            )
            keys = [k for k, _ in decorated]
            pts = [p for _, p in decorated]
        for i in range(1, len(keys)):
            if keys[i] == keys[i - 1]:
                raise DuplicatePointError(f"duplicate point {pts[i]}")
            if keys[i] < keys[i - 1]:
                raise UnsortedInputError("points not in Morton order")
        self._points = pts
        self._keys = keys
        self._heights = list(heights) if heights is not None else None
        if self._heights is not None and len(self._heights) != len(pts):
            raise PqcError("heights length does not match points")
        self.counters = Counters()

    def count(self) -> int:
        return len(self._points)

    def point_at(self, rank: int) -> Point:
        return self._points[rank]

    def successor_rank(self, key: int) -> int:
        import bisect

        return bisect.bisect_left(self._keys, key)

    def height_at(self, rank: int) -> int:
        return self._heights[rank] if self._heights is not None else 0

    @property
    def has_heights(self) -> bool:
        return self._heights is not None

    def iter_range(self, lo: int, hi: int) -> Iterator[Point]:
        return iter(self._points[lo:hi])

    def key_at(self, rank: int) -> int:
        return self._keys[rank]


def vertices(s: TrieSquare, src: PointSource) -> VertexRange:
    """Contiguous rank range of the stored points inside ``s``.

    The square's keys are one run [key(corner), key(corner) + 2**(d*h)), so
    two successor searches bound the range.  The upper key may exceed the
    widest valid key (root query); that needs no special casing because the
    search simply answers n.
    """
    lo_key, hi_key = square_key_range(s, src.cfg)
    src.counters.range_queries += 1
    return VertexRange(src.successor_rank(lo_key), src.successor_rank(hi_key))


def is_crowded(s: TrieSquare, src: PointSource) -> bool:
    """Crowding test: own count >= 2, or == 1 with a nonempty neighbour."""
    own = vertices(s, src)
    if len(own) >= 2:
        return True
    if len(own) == 0:
        return False
    for nb in neighbours(s, src.cfg):
        src.counters.squares_scanned += 1
        if len(vertices(nb, src)) > 0:
            return True
    return False


def square_of(p: Point, src: PointSource, cfg: Config = None) -> TrieSquare:
    """Largest uncrowded trie square containing ``p``.

    ``p`` need not be stored.  When the source tracks leaf heights and
    ``p`` is stored, the recorded height is answered directly.  Otherwise
    the height is found by exponential-then-binary search, which is valid
    because crowdedness is monotone under descent.  If even the unit square
    is crowded (a stored point with another at an adjacent grid position),
    the unit square is returned: that is the floor of the subdivision.
    """
    cfg = cfg or src.cfg
    validate_point(p, cfg)
    src = src.query_context()
    if src.has_heights:
        key = interleave(p, cfg)
        r = src.successor_rank(key)
        if r < src.count() and src.point_at(r) == p:
            return square_of_point(p, src.height_at(r))

    def uncrowded(h: int) -> bool:
        return not is_crowded(square_of_point(p, h), src)

    if not uncrowded(0):
        return square_of_point(p, 0)
    # Exponential climb to bracket the first crowded height, then bisect.
    lo = 0  # known uncrowded
    step = 1
    while True:
        h = lo + step
        if h >= cfg.w:
            if uncrowded(cfg.w):
                return square_of_point(p, cfg.w)
            hi = cfg.w  # known crowded
            break
        if uncrowded(h):
            lo = h
            step <<= 1
        else:
            hi = h
            break
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if uncrowded(mid):
            lo = mid
        else:
            hi = mid
    return square_of_point(p, lo)


def restricted_voronoi(v: Point, src: PointSource, cfg: Config = None):
    """Voronoi cell of ``v`` clipped at radius 2*rho*NN(v).

    For a rho-well-spaced source the clipped cell equals the true cell (the
    cell of such a point reaches at most rho*NN(v) from it), so the clip is
    invisible; the precondition is documented, not checked.  Only d=2 cell
    geometry is supported.
    """
    cfg = cfg or src.cfg
    if cfg.d != 2:
        raise DimensionError("restricted Voronoi cell geometry requires d=2")
    from . import geom

    return geom.clipped_voronoi(v, 2 * cfg.rho, src, cfg)
