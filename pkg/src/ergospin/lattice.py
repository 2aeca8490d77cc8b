"""Finite volumes of Z^nu with the max-coordinate metric.

Sites are plain tuples of ints. A :class:`Volume` stores its sites in
lexicographic order; that order fixes tensor-leg positions everywhere else in
the package, and it is preserved by translations.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .config import InputError

Site = tuple


def as_site(coords: Iterable[int]) -> Site:
    site = tuple(int(c) for c in coords)
    if not site:
        raise InputError("a site needs at least one coordinate")
    return site


def _check_same_dim(a: Site, b: Site) -> None:
    if len(a) != len(b):
        raise InputError(f"dimension mismatch: {a} vs {b}")


def distance(a: Site, b: Site) -> int:
    """l-infinity distance max_j |a_j - b_j|."""
    _check_same_dim(a, b)
    return max(abs(x - y) for x, y in zip(a, b))


def add(a: Site, b: Site) -> Site:
    _check_same_dim(a, b)
    return tuple(x + y for x, y in zip(a, b))


def neg(a: Site) -> Site:
    return tuple(-x for x in a)


def origin(nu: int) -> Site:
    return (0,) * nu


@dataclass(frozen=True)
class Volume:
    """Immutable finite set of sites, lexicographically ordered."""

    sites: tuple

    def __init__(self, sites: Iterable[Iterable[int]]):
        pts = sorted({as_site(s) for s in sites})
        if pts:
            nu = len(pts[0])
            if any(len(p) != nu for p in pts):
                raise InputError("all sites of a volume must share one dimension")
        object.__setattr__(self, "sites", tuple(pts))

    @property
    def nu(self) -> int:
        if not self.sites:
            raise InputError("empty volume has no dimension")
        return len(self.sites[0])

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self._set

    @property
    def _set(self) -> frozenset:
        # cached lazily; dataclass is frozen so write via object.__setattr__
        try:
            return self.__dict__["_set_cache"]
        except KeyError:
            s = frozenset(self.sites)
            object.__setattr__(self, "_set_cache", s)
            return s

    def index(self, site: Site) -> int:
        return self.sites.index(tuple(site))

    def issubset(self, other: "Volume") -> bool:
        return self._set <= other._set

    def union(self, other: "Volume") -> "Volume":
        return Volume(self._set | other._set)

    def difference(self, other: "Volume") -> "Volume":
        return Volume(self._set - other._set)

    def intersection(self, other: "Volume") -> "Volume":
        return Volume(self._set & other._set)

    def symmetric_difference(self, other: "Volume") -> "Volume":
        return Volume(self._set ^ other._set)

    def isdisjoint(self, other: "Volume") -> bool:
        return self._set.isdisjoint(other._set)

    def diameter(self) -> int:
        if len(self) <= 1:
            return 0
        return max(distance(a, b) for a in self.sites for b in self.sites)

    def __eq__(self, other) -> bool:
        return isinstance(other, Volume) and self.sites == other.sites

    def __hash__(self) -> int:
        return hash(self.sites)

    def __repr__(self) -> str:
        return f"Volume({list(self.sites)})"

    def to_json(self) -> list:
        return [list(s) for s in self.sites]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[int]]) -> "Volume":
        return cls(data)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def ball(center: Site, r: int) -> Volume:
    """Closed ball b_center(r); has exactly (2r+1)^nu sites."""
    if r < 0:
        raise InputError(f"radius must be non-negative, got {r}")
    center = as_site(center)
    offsets = itertools.product(range(-r, r + 1), repeat=len(center))
    return Volume(add(center, o) for o in offsets)


def chain(length: int, start: int = 0) -> Volume:
    """The one-dimensional volume {start, ..., start+length-1}."""
    if length < 1:
        raise InputError("chain length must be positive")
    return Volume((start + i,) for i in range(length))


def shell_size(nu: int, r: int) -> int:
    """|b_0(r) minus b_0(r-1)|, in closed form."""
    if r == 0:
        return 1
    return (2 * r + 1) ** nu - (2 * r - 1) ** nu


def shell_constant(nu: int, r_max: int) -> float:
    """Finite-range witness of the hyper-regularity constant kappa.

    max over 2 <= r <= r_max of |b_0(r) minus b_0(r-1)| * (1+r)^-(nu-1).
    """
    if nu < 1:
        raise InputError("nu must be positive")
    if r_max < 2:
        raise InputError("r_max must be at least 2")
    return max(shell_size(nu, r) * (1.0 + r) ** (-(nu - 1)) for r in range(2, r_max + 1))


def translate(v: Volume, x: Site) -> Volume:
    x = as_site(x)
    if len(v) and len(x) != v.nu:
        raise InputError(f"shift {x} does not match volume dimension {v.nu}")
    return Volume(add(s, x) for s in v.sites)


@dataclass(frozen=True)
class BoxSequence:
    """Concentric boxes b_center(r) for strictly increasing radii."""

    radii: tuple
    center: Site

    def __init__(self, radii: Iterable[int], center: Site):
        rs = tuple(int(r) for r in radii)
        if not rs or any(r < 0 for r in rs) or any(b <= a for a, b in zip(rs, rs[1:])):
            raise InputError(f"radii must be strictly increasing non-negative integers: {rs}")
        object.__setattr__(self, "radii", rs)
        object.__setattr__(self, "center", as_site(center))

    def volumes(self) -> list:
        return [ball(self.center, r) for r in self.radii]

    def __iter__(self):
        return iter(self.volumes())


def interior(v: Volume, r: int) -> Volume:
    """Sites p of ``v`` whose ball b_p(r) lies inside ``v``."""
    if r < 0:
        raise InputError(f"radius must be non-negative, got {r}")
    return Volume(p for p in v.sites if all(q in v for q in ball(p, r).sites))
