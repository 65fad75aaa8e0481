"""Finite boxes of Z^D, regions, balls, fattenings and boundary layers.

Coordinates are integer tuples. Sites of every region are kept in
lexicographic order, and that order fixes the tensor-factor layout used by
the rest of the package.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

Coord = tuple[int, ...]


def _as_coord(x, dimension: int) -> Coord:
    if isinstance(x, (int, np.integer)):
        x = (int(x),)
    c = tuple(int(v) for v in x)
    if len(c) != dimension:
        raise DomainError(f"coordinate {x!r} does not have dimension {dimension}")
    return c


def _pairwise(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    diff = np.abs(a[:, None, :] - b[None, :, :])
    if metric == "linf":
        return diff.max(axis=2)
    return diff.sum(axis=2)


@dataclass(frozen=True)
class Lattice:
    """A box ``prod_i [lo_i, hi_i]`` of Z^D with a uniform local dimension.

    ``metric`` is ``"linf"`` (Chebyshev, balls are boxes) or ``"l1"``
    (Manhattan, the nearest-neighbour graph distance).
    """

    box: tuple[tuple[int, int], ...]
    site_dim: int = 2
    metric: str = "linf"

    def __post_init__(self):
        box = tuple((int(lo), int(hi)) for lo, hi in self.box)
        if not box:
            raise DomainError("lattice needs at least one dimension")
        if any(hi < lo for lo, hi in box):
            raise DomainError(f"empty interval in box {box}")
        if self.site_dim < 2:
            raise DomainError("local dimension must be at least 2")
        if self.metric not in ("linf", "l1"):
            raise DomainError(f"unknown metric {self.metric!r}")
        object.__setattr__(self, "box", box)

    @classmethod
    def chain(cls, n: int, site_dim: int = 2, metric: str = "linf") -> "Lattice":
        """Sites ``0 .. n-1`` of Z."""
        return cls(((0, n - 1),), site_dim, metric)

    @classmethod
    def grid(cls, shape: Sequence[int], site_dim: int = 2, metric: str = "linf") -> "Lattice":
        return cls(tuple((0, n - 1) for n in shape), site_dim, metric)

    @property
    def dimension(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.box)

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.shape))

    def sites(self) -> tuple[Coord, ...]:
        return tuple(itertools.product(*(range(lo, hi + 1) for lo, hi in self.box)))

    def contains(self, x: Coord) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in zip(x, self.box))

    def coord(self, x) -> Coord:
        return _as_coord(x, self.dimension)

    def dist(self, x, y) -> int:
        a = np.asarray(self.coord(x))
        b = np.asarray(self.coord(y))
        d = np.abs(a - b)
        return int(d.max() if self.metric == "linf" else d.sum())

    def region(self, sites: Iterable) -> "Region":
        return Region(self, sites)

    def full(self) -> "Region":
        return Region(self, self.sites())

    def neighbors(self, x: Coord, inside: bool = False) -> list[Coord]:
        """Nearest neighbours of ``x`` in the l1 sense (the Z^D graph edges)."""
        out = []
        for i in range(self.dimension):
            for step in (-1, 1):
                y = list(x)
                y[i] += step
                y = tuple(y)
                if not inside or self.contains(y):
                    out.append(y)
        return out


class Region:
    """An immutable, lexicographically ordered set of sites of a lattice."""

    __slots__ = ("lattice", "sites", "_set")

    def __init__(self, lattice: Lattice, sites: Iterable):
        coords = {_as_coord(s, lattice.dimension) for s in sites}
        for c in coords:
            if not lattice.contains(c):
                raise DomainError(f"site {c} outside the box {lattice.box}")
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "sites", tuple(sorted(coords)))
        object.__setattr__(self, "_set", frozenset(coords))

    def __setattr__(self, name, value):
        raise AttributeError("Region is immutable")

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, x) -> bool:
        return _as_coord(x, self.lattice.dimension) in self._set

    def __eq__(self, other) -> bool:
        if not isinstance(other, Region):
            return NotImplemented
        return self._set == other._set

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        if self.lattice.dimension == 1:
            return f"Region({[s[0] for s in self.sites]})"
        return f"Region({list(self.sites)})"

    def __or__(self, other: "Region") -> "Region":
        return Region(self.lattice, self._set | other._set)

    def __and__(self, other: "Region") -> "Region":
        return Region(self.lattice, self._set & other._set)

    def __sub__(self, other: "Region") -> "Region":
        return Region(self.lattice, self._set - other._set)

    def issubset(self, other: "Region") -> bool:
        return self._set <= other._set

    def isdisjoint(self, other: "Region") -> bool:
        return self._set.isdisjoint(other._set)

    @property
    def is_empty(self) -> bool:
        return not self.sites

    @property
    def dim(self) -> int:
        """Hilbert-space dimension of the region."""
        return self.lattice.site_dim ** len(self.sites)

    def array(self) -> np.ndarray:
        return np.array(self.sites, dtype=int).reshape(len(self.sites), self.lattice.dimension)

    def positions_in(self, parent: "Region") -> tuple[int, ...]:
        """Tensor-factor indices of this region's sites inside ``parent``."""
        index = {s: i for i, s in enumerate(parent.sites)}
        try:
            return tuple(index[s] for s in self.sites)
        except KeyError as exc:
            raise DomainError(f"site {exc.args[0]} not in parent region") from None

    def diameter(self) -> int:
        if len(self) <= 1:
            return 0
        a = self.array()
        return int(_pairwise(a, a, self.lattice.metric).max())

    def components(self) -> list["Region"]:
        """Connected components under the lattice metric (distance-1 adjacency)."""
        remaining = set(self._set)
        comps = []
        metric = self.lattice.metric
        while remaining:
            seed = min(remaining)
            stack = [seed]
            comp = {seed}
            remaining.discard(seed)
            while stack:
                x = stack.pop()
                for y in list(remaining):
                    d = np.abs(np.subtract(x, y))
                    if (d.max() if metric == "linf" else d.sum()) <= 1:
                        remaining.discard(y)
                        comp.add(y)
                        stack.append(y)
            comps.append(Region(self.lattice, comp))
        comps.sort(key=lambda r: r.sites[0])
        return comps

    def to_json(self) -> str:
        return json.dumps([list(s) for s in self.sites])

    @classmethod
    def from_json(cls, lattice: Lattice, text: str) -> "Region":
        return cls(lattice, [tuple(s) for s in json.loads(text)])


def ball(lattice: Lattice, center, r: int) -> Region:
    """``{y in box : dist(center, y) <= r}``."""
    c = lattice.coord(center)
    if not lattice.contains(c):
        raise DomainError(f"center {c} outside the box")
    if r < 0:
        raise DomainError("radius must be nonnegative")
    return _clipped_ball(lattice, c, r)


def _clipped_ball(lattice: Lattice, c: Coord, r: int) -> Region:
    ranges = [range(max(lo, v - r), min(hi, v + r) + 1) for v, (lo, hi) in zip(c, lattice.box)]
    sites = itertools.product(*ranges)
    if lattice.metric == "l1":
        sites = (y for y in sites if sum(abs(a - b) for a, b in zip(y, c)) <= r)
    return Region(lattice, sites)


def region_distance(a: Region, b: Region) -> int:
    if a.is_empty or b.is_empty:
        raise DomainError("distance between empty regions is undefined")
    return int(_pairwise(a.array(), b.array(), a.lattice.metric).min())


def _within(lattice: Lattice, a: Region, s: int) -> Region:
    """Sites of the box at distance at most ``s`` from ``a``."""
    every = np.array(lattice.sites(), dtype=int)
    d = _pairwise(every, a.array(), lattice.metric).min(axis=1)
    return Region(lattice, [tuple(x) for x in every[d <= s]])


def _enclosing_ball(lattice: Lattice, comp: Region) -> tuple[Coord, int]:
    """Smallest site-centred ball containing ``comp``.

    Among centres giving the minimal radius, the one whose ball clipped to the
    box has the fewest sites wins; remaining ties go to the lexicographically
    smallest centre.
    """
    pts = comp.array()
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    best = None
    r = int(np.ceil((hi - lo).max() / 2))
    while best is None:
        for c in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            dist = _pairwise(pts, np.array([c]), lattice.metric)
            if dist.max() <= r:
                size = len(_clipped_ball(lattice, c, r))
                if best is None or size < best[0]:
                    best = (size, c)
        if best is None:
            r += 1
    return tuple(int(v) for v in best[1]), r


def fatten_balls(lattice: Lattice, a: Region, s: int) -> list[tuple[Coord, int]]:
    """The ball cover ``[(center, radius), ...]`` defining ``fatten(a, s)``."""
    if a.is_empty:
        raise DomainError("cannot fatten an empty region")
    if s < 0:
        raise DomainError("fattening radius must be nonnegative")
    near = _within(lattice, a, s)
    balls = [_enclosing_ball(lattice, comp) for comp in near.components()]
    merged = True
    while merged:
        merged = False
        regions = [_clipped_ball(lattice, c, r) for c, r in balls]
        for i, j in itertools.combinations(range(len(balls)), 2):
            if not regions[i].isdisjoint(regions[j]):
                union = regions[i] | regions[j]
                rest = [b for k, b in enumerate(balls) if k not in (i, j)]
                balls = rest + [_enclosing_ball(lattice, union)]
                merged = True
                break
    return sorted(balls)


def fatten(lattice: Lattice, a: Region, s: int) -> Region:
    """``A(s)``: the smallest disjoint union of balls covering the s-neighbourhood of A."""
    out = Region(lattice, ())
    for c, r in fatten_balls(lattice, a, s):
        out = out | _clipped_ball(lattice, c, r)
    return out


def distance_to_complement(region: Region) -> dict[Coord, int]:
    """For each site, the distance to the nearest site of Z^D outside ``region``."""
    lattice = region.lattice
    if region.is_empty:
        return {}
    pts = region.array()
    lo = pts.min(axis=0) - 1
    hi = pts.max(axis=0) + 1
    shell = [
        y for y in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi)))
        if tuple(y) not in region._set
    ]
    d = _pairwise(pts, np.array(shell, dtype=int), lattice.metric).min(axis=1)
    return {s: int(v) for s, v in zip(region.sites, d)}


def boundary_layer(lattice: Lattice, sub: Region, d: int) -> Region:
    """``{x in sub : dist(x, Z^D minus sub) <= d}``."""
    if not all(lattice.contains(s) for s in sub):
        raise DomainError("region not contained in the box")
    dists = distance_to_complement(sub)
    return Region(lattice, [s for s, v in dists.items() if v <= d])


def boundary_depth(container: Region, support: Region) -> int:
    """Smallest ``d`` with ``support`` inside the depth-d boundary layer of ``container``."""
    dists = distance_to_complement(container)
    return max(dists[s] for s in support)
