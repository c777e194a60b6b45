"""Finite geometry of Z^d: boxes, nearest-neighbour edges, outer boundaries.

Sites are plain integer tuples.  An edge is stored as the lexicographically
ordered pair of its endpoints, so ``edge_key(x, y) == edge_key(y, x)`` and
coupling lookups do not depend on orientation.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Site = tuple[int, ...]
Edge = tuple[Site, Site]


def edge_key(x: Sequence[int], y: Sequence[int]) -> Edge:
    """Canonical unordered key for the edge {x, y}; raises if not adjacent."""
    a, b = tuple(int(c) for c in x), tuple(int(c) for c in y)
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {a} vs {b}")
    if sum(abs(i - j) for i, j in zip(a, b)) != 1:
        raise ValueError(f"{a} and {b} are not nearest neighbours")
    return (a, b) if a <= b else (b, a)


def neighbours(x: Site) -> list[Site]:
    """The 2d lattice neighbours of ``x``."""
    out = []
    for axis in range(len(x)):
        for step in (-1, 1):
            y = list(x)
            y[axis] += step
            out.append(tuple(y))
    return out


@dataclass(frozen=True)
class Region:
    """A finite set of sites with its edge structure.

    Attributes
    ----------
    sites : tuple of Site
        Sorted sites of the region; array axes follow this order.
    interior_edges : tuple of (int, int)
        Index pairs ``(i, j)``, ``i < j``, of edges with both endpoints inside.
    boundary : tuple of Site
        Outer boundary: sites outside the region adjacent to it, sorted.
    cross_edges : tuple of (int, int)
        Pairs ``(i, b)``: site index ``i`` inside, boundary index ``b``.
    """

    d: int
    sites: tuple[Site, ...]
    interior_edges: tuple[tuple[int, int], ...]
    boundary: tuple[Site, ...]
    cross_edges: tuple[tuple[int, int], ...]
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    @classmethod
    def from_sites(cls, sites: Iterable[Sequence[int]]) -> "Region":
        pts = sorted({tuple(int(c) for c in s) for s in sites})
        if not pts:
            raise ValueError("a region needs at least one site")
        d = len(pts[0])
        if d < 1 or any(len(s) != d for s in pts):
            raise ValueError("all sites must share one dimension d >= 1")
        index = {s: i for i, s in enumerate(pts)}
        interior, outside = [], set()
        for i, s in enumerate(pts):
            for y in neighbours(s):
                j = index.get(y)
                if j is None:
                    outside.add(y)
                elif i < j:
                    interior.append((i, j))
        boundary = tuple(sorted(outside))
        bindex = {s: b for b, s in enumerate(boundary)}
        cross = [(i, bindex[y]) for i, s in enumerate(pts)
                 for y in neighbours(s) if y in bindex]
        obj = cls(d, tuple(pts), tuple(sorted(interior)), boundary, tuple(cross))
        object.__setattr__(obj, "_index", index)
        return obj

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, x) -> bool:
        return tuple(x) in self._index

    def index(self, x: Sequence[int]) -> int:
        try:
            return self._index[tuple(x)]
        except KeyError:
            raise KeyError(f"site {tuple(x)} is not in the region") from None

    def issubset(self, other: "Region") -> bool:
        return all(s in other for s in self.sites)

    def interior_edge_keys(self) -> list[Edge]:
        return [edge_key(self.sites[i], self.sites[j]) for i, j in self.interior_edges]

    def cross_edge_keys(self) -> list[Edge]:
        return [edge_key(self.sites[i], self.boundary[b]) for i, b in self.cross_edges]

    def edge_keys(self) -> list[Edge]:
        """All edges touching the region: interior first, then cross edges."""
        return self.interior_edge_keys() + self.cross_edge_keys()

    def coords(self) -> np.ndarray:
        return np.asarray(self.sites, dtype=np.int64).reshape(len(self), self.d)

    def boundary_coords(self) -> np.ndarray:
        return np.asarray(self.boundary, dtype=np.int64).reshape(len(self.boundary), self.d)

    def chain_order(self) -> list[int] | None:
        """Site indices along the path if the region is a simple path, else None."""
        k = len(self)
        if len(self.interior_edges) != k - 1:
            return None
        adj: dict[int, list[int]] = {i: [] for i in range(k)}
        for i, j in self.interior_edges:
            adj[i].append(j)
            adj[j].append(i)
        if any(len(v) > 2 for v in adj.values()):
            return None
        ends = [i for i, v in adj.items() if len(v) <= 1]
        start = min(ends) if ends else None
        if start is None:
            return None
        order, prev = [start], None
        while len(order) < k:
            nxt = [j for j in adj[order[-1]] if j != prev]
            if not nxt:
                return None
            prev = order[-1]
            order.append(nxt[0])
        return order

    def to_json(self) -> dict:
        return {"d": self.d,
                "sites": [list(s) for s in self.sites],
                "boundary": [list(s) for s in self.boundary]}

    @classmethod
    def from_json(cls, payload: dict) -> "Region":
        region = cls.from_sites(payload["sites"])
        if region.d != payload["d"]:
            raise ValueError("stored dimension does not match the sites")
        if "boundary" in payload and [list(s) for s in region.boundary] != payload["boundary"]:
            raise ValueError("stored boundary does not match the sites")
        return region

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def make_box(center: Sequence[int], half_widths: Sequence[int]) -> Region:
    """Axis-aligned box ``prod_k [c_k - h_k, c_k + h_k]``."""
    if len(center) != len(half_widths):
        raise ValueError("center and half_widths must have the same length")
    if any(h < 0 for h in half_widths):
        raise ValueError("half widths must be non-negative")
    ranges = [range(c - h, c + h + 1) for c, h in zip(center, half_widths)]
    return Region.from_sites(itertools.product(*ranges))


def make_chain(length: int, start: int = 0, d: int = 1, axis: int = 0) -> Region:
    """``length`` consecutive sites starting at ``start`` along one axis."""
    if length < 1:
        raise ValueError("length must be >= 1")
    sites = []
    for t in range(start, start + length):
        s = [0] * d
        s[axis] = t
        sites.append(s)
    return Region.from_sites(sites)


def van_hove_ratio(region: Region) -> float:
    """Surface-to-volume ratio |boundary| / |sites|."""
    return len(region.boundary) / len(region.sites)


@dataclass(frozen=True)
class RegionSequence:
    regions: tuple[Region, ...]
    kind: str = "cofinal"

    def __post_init__(self):
        if self.kind not in ("cofinal", "van_hove"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        for a, b in zip(self.regions, self.regions[1:]):
            if not a.issubset(b):
                raise ValueError("regions must be ordered by inclusion")
        if self.kind == "van_hove":
            ratios = [van_hove_ratio(r) for r in self.regions]
            if any(b > a for a, b in zip(ratios, ratios[1:])):
                raise ValueError("boundary ratio must be non-increasing for a van Hove sequence")

    def __len__(self) -> int:
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    def __getitem__(self, i):
        return self.regions[i]

    @property
    def largest(self) -> Region:
        return self.regions[-1]


def cofinal_boxes(d: int, n_max: int, n_min: int = 1, kind: str = "cofinal") -> RegionSequence:
    """Centred cubes of half-width ``n_min..n_max``."""
    if n_max < 1 or n_min < 0 or n_min > n_max:
        raise ValueError("need 0 <= n_min <= n_max and n_max >= 1")
    boxes = tuple(make_box((0,) * d, (n,) * d) for n in range(n_min, n_max + 1))
    return RegionSequence(boxes, kind)
