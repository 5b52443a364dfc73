"""Lattice geometry on Z^d: sites, finite regions, the l-infinity metric and
the overlapping cube partitions used by the sweeping-out construction."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

Site = tuple[int, ...]


def as_site(s, d: int | None = None) -> Site:
    if isinstance(s, (int, np.integer)):
        site = (int(s),)
    else:
        site = tuple(int(c) for c in s)
    if d is not None and len(site) != d:
        raise ValueError(f"site {site} does not have dimension {d}")
    if len(site) < 1:
        raise ValueError("sites need at least one coordinate")
    return site


def site_dist(a: Site, b: Site) -> int:
    return max(abs(x - y) for x, y in zip(a, b))


@dataclass(frozen=True)
class Region:
    """Finite set of lattice sites, stored sorted for deterministic iteration."""

    d: int
    sites: tuple[Site, ...]

    def __init__(self, sites: Iterable, d: int | None = None):
        items = [as_site(s) for s in sites]
        if d is None:
            if not items:
                raise ValueError("empty region needs an explicit dimension")
            d = len(items[0])
        if d < 1:
            raise ValueError("dimension must be >= 1")
        for s in items:
            if len(s) != d:
                raise ValueError(f"site {s} does not have dimension {d}")
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "sites", tuple(sorted(set(items))))

    @classmethod
    def interval(cls, lo: int, hi: int) -> Region:
        """The one-dimensional region {lo, ..., hi}."""
        return cls([(k,) for k in range(lo, hi + 1)], d=1)

    @classmethod
    def box(cls, lo: Site, hi: Site) -> Region:
        ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
        return cls(itertools.product(*ranges), d=len(lo))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, s) -> bool:
        return as_site(s) in self._members

    @property
    def _members(self) -> frozenset:
        # cached lazily; frozen dataclass so go through object.__setattr__
        try:
            return self.__dict__["_set"]
        except KeyError:
            m = frozenset(self.sites)
            object.__setattr__(self, "_set", m)
            return m

    def index(self) -> dict[Site, int]:
        return {s: k for k, s in enumerate(self.sites)}

    def union(self, other: Region) -> Region:
        return Region(self.sites + other.sites, d=self.d)

    def intersection(self, other: Region) -> Region:
        return Region([s for s in self.sites if s in other], d=self.d)

    def difference(self, other: Region) -> Region:
        return Region([s for s in self.sites if s not in other], d=self.d)

    def halo(self, r: int) -> Region:
        """Sites outside the region within distance r of it."""
        offs = list(itertools.product(range(-r, r + 1), repeat=self.d))
        out = set()
        for s in self.sites:
            for o in offs:
                t = tuple(a + b for a, b in zip(s, o))
                if t not in self:
                    out.add(t)
        return Region(out, d=self.d)

    def thicken(self, r: int) -> Region:
        """{j : dist(j, region) <= r}."""
        return self.union(self.halo(r))

    def diam(self) -> int:
        if not self.sites:
            return 0
        arr = np.asarray(self.sites)
        return int((arr.max(axis=0) - arr.min(axis=0)).max())

    def __repr__(self) -> str:
        if self.d == 1 and self.sites:
            xs = [s[0] for s in self.sites]
            if xs == list(range(xs[0], xs[-1] + 1)):
                return f"Region({{{xs[0]}..{xs[-1]}}})"
        return f"Region({list(self.sites)})"


def dist(a: Region, b: Region) -> int:
    """l-infinity distance between two nonempty regions."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty region")
    if a.d != b.d:
        raise ValueError("regions live in different dimensions")
    A = np.asarray(a.sites)
    B = np.asarray(b.sites)
    return int(np.abs(A[:, None, :] - B[None, :, :]).max(axis=2).min())


def binary_vector(s: int, d: int) -> tuple[int, ...]:
    return tuple((s >> n) & 1 for n in range(d))


@dataclass(frozen=True)
class CubePartition:
    """The 2^d collections of disjoint translated cubes X_k = k + [0, 2(L+R)]^d.

    Collection s uses translations in 2(L+2R) Z^d + (L+2R) v_s, where v_s is
    the binary vector of s.  Cubes are produced lazily over a bounded window.
    """

    d: int
    L: int
    R: int
    base: Region = field(repr=False, compare=False)

    @property
    def side(self) -> int:
        return 2 * (self.L + self.R)

    @property
    def period(self) -> int:
        return 2 * (self.L + 2 * self.R)

    @property
    def n_collections(self) -> int:
        return 2 ** self.d

    def offset(self, s: int) -> tuple[int, ...]:
        v = binary_vector(s, self.d)
        return tuple((self.L + 2 * self.R) * c for c in v)

    def corners(self, s: int, lo: Site, hi: Site) -> list[Site]:
        """Corners k of the cubes of collection s meeting the window [lo, hi]."""
        off = self.offset(s)
        per = self.period
        ranges = []
        for a in range(self.d):
            # k + side >= lo and k <= hi with k = off + per*m
            m_lo = -((-(lo[a] - self.side - off[a])) // per)
            m_hi = (hi[a] - off[a]) // per
            ranges.append([off[a] + per * m for m in range(m_lo, m_hi + 1)])
        return [tuple(k) for k in itertools.product(*ranges)]

    def cube(self, corner: Site) -> Region:
        return Region([tuple(c + b for c, b in zip(corner, s)) for s in self.base], d=self.d)

    def cubes(self, s: int, lo: Site, hi: Site) -> list[Region]:
        if not 0 <= s < self.n_collections:
            raise ValueError(f"collection index {s} out of range")
        return [self.cube(k) for k in self.corners(s, lo, hi)]

    def clipped_cubes(self, s: int, window: Region) -> list[Region]:
        """Cubes of collection s intersected with a region (empty pieces dropped)."""
        arr = np.asarray(window.sites)
        lo, hi = tuple(arr.min(axis=0)), tuple(arr.max(axis=0))
        out = []
        for c in self.cubes(s, lo, hi):
            piece = c.intersection(window)
            if len(piece):
                out.append(piece)
        return out


def build_cube_partition(d: int, L: int, R: int) -> CubePartition:
    if d < 1 or L < 1 or R < 1:
        raise ValueError("d, L and R must all be >= 1")
    base = Region.box((0,) * d, (2 * (L + R),) * d)
    return CubePartition(d=d, L=L, R=R, base=base)
