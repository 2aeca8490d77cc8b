"""Site-indexed IID disorder with an exact lattice-shift action.

The draw at a site is a pure function of (seed, stream, site): the site is
packed injectively into an integer key, mixed with the seed through the
splitmix64 finalizer, and mapped through the law. Because nothing is stateful,
the shift theta_x is a relabelling of sites and every covariance identity
downstream holds bit for bit.

Convention: ``shift(f, x)`` realizes theta_x with

    sample(shift(f, x), y) == sample(f, y - x),

which is the direction that makes tau_x h(omega, Z) = h(theta_x omega, Z + x)
hold for interactions built from local draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import InputError
from .lattice import Site, Volume, add, ball

COORD_BITS = 21
COORD_LIMIT = 1 << 20  # |coord| < 2^20
MAX_NU = 3

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_LANE = np.uint64(0xD1B54A32D192ED03)
_TWO_M53 = 2.0**-53


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def site_keys(coords: np.ndarray) -> np.ndarray:
    """Injective packing of integer coordinates (n, nu) into uint64 keys."""
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim == 1:
        coords = coords[None, :]
    nu = coords.shape[1]
    if nu > MAX_NU:
        raise InputError(f"site keys support nu <= {MAX_NU}")
    if np.any(np.abs(coords) >= COORD_LIMIT):
        raise InputError(f"site coordinates must lie strictly within +-{COORD_LIMIT}")
    keys = np.zeros(coords.shape[0], dtype=np.uint64)
    for j in range(nu):
        keys |= (coords[:, j] + COORD_LIMIT).astype(np.uint64) << np.uint64(COORD_BITS * j)
    return keys


def hash_lanes(seed: int, stream: int, keys: np.ndarray, lanes: int = 1) -> np.ndarray:
    """Return uint64 hashes of shape (lanes, n)."""
    with np.errstate(over="ignore"):
        s = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        s = _mix64(s + np.uint64(stream & 0xFFFFFFFF) * _LANE + _GOLDEN)
        out = np.empty((lanes, keys.size), dtype=np.uint64)
        for lane in range(lanes):
            x = keys * _GOLDEN + np.uint64(lane + 1) * _LANE
            out[lane] = _mix64(_mix64(x) ^ s)
    return out


def _unit(h: np.ndarray) -> np.ndarray:
    """uint64 -> [0, 1) with 53 bits."""
    return (h >> np.uint64(11)).astype(np.float64) * _TWO_M53


# ---------------------------------------------------------------------------
# laws


@dataclass(frozen=True)
class Law:
    kind: str
    params: tuple

    def __post_init__(self):
        k, p = self.kind, self.params
        if k == "uniform":
            if len(p) != 2 or not p[0] < p[1]:
                raise InputError("uniform law needs [a, b] with a < b")
        elif k == "bernoulli":
            if len(p) != 2 or not 0 <= p[0] <= 1 or len(p[1]) != 2:
                raise InputError("bernoulli law needs [p, [v0, v1]] with 0 <= p <= 1")
        elif k == "gaussian":
            if len(p) != 2 or not p[1] > 0:
                raise InputError("gaussian law needs [mu, sigma] with sigma > 0")
        elif k == "constant":
            if len(p) != 1:
                raise InputError("constant law needs a single value")
        else:
            raise InputError(f"unknown law {k!r}")

    lanes = property(lambda self: 2 if self.kind == "gaussian" else 1)

    def transform(self, h: np.ndarray) -> np.ndarray:
        k, p = self.kind, self.params
        n = h.shape[1]
        if k == "constant":
            return np.full(n, float(p[0]))
        u = _unit(h[0])
        if k == "uniform":
            return p[0] + (p[1] - p[0]) * u
        if k == "bernoulli":
            return np.where(u < p[0], float(p[1][1]), float(p[1][0]))
        # Box-Muller on two lanes; u1 in (0, 1] keeps the log finite
        u1 = 1.0 - u
        u2 = _unit(h[1])
        return p[0] + p[1] * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        if k == "bernoulli":
            return (1 - p[0]) * p[1][0] + p[0] * p[1][1]
        return float(p[0])

    @property
    def std(self) -> float:
        k, p = self.kind, self.params
        if k == "uniform":
            return (p[1] - p[0]) / math.sqrt(12.0)
        if k == "bernoulli":
            return abs(p[1][1] - p[1][0]) * math.sqrt(p[0] * (1 - p[0]))
        if k == "gaussian":
            return float(p[1])
        return 0.0

    @property
    def sup(self) -> float:
        """Essential sup of |lambda|; inf for unbounded laws."""
        k, p = self.kind, self.params
        if k == "uniform":
            return max(abs(p[0]), abs(p[1]))
        if k == "bernoulli":
            return max(abs(v) for v in p[1])
        if k == "gaussian":
            return math.inf
        return abs(p[0])

    def to_json(self) -> dict:
        if self.kind == "constant":
            return {"constant": self.params[0]}
        if self.kind == "bernoulli":
            return {"bernoulli": [self.params[0], list(self.params[1])]}
        return {self.kind: list(self.params)}

    @classmethod
    def from_json(cls, data) -> "Law":
        if not isinstance(data, dict) or len(data) != 1:
            raise InputError(f"law must be a one-key object, got {data!r}")
        (kind, p), = data.items()
        if kind == "constant":
            return cls("constant", (float(p),))
        if kind == "bernoulli":
            return cls("bernoulli", (float(p[0]), tuple(float(v) for v in p[1])))
        if not isinstance(p, (list, tuple)):
            raise InputError(f"law {kind!r} needs a parameter list")
        return cls(kind, tuple(float(v) for v in p))


def uniform(a: float = 0.0, b: float = 1.0) -> Law:
    return Law("uniform", (float(a), float(b)))


def gaussian(mu: float = 0.0, sigma: float = 1.0) -> Law:
    return Law("gaussian", (float(mu), float(sigma)))


def bernoulli(p: float, values=(0.0, 1.0)) -> Law:
    return Law("bernoulli", (float(p), tuple(float(v) for v in values)))


def constant(c: float) -> Law:
    return Law("constant", (float(c),))


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class DisorderField:
    """Realization omega of an IID field, addressed by site.

    ``offset`` accumulates applied shifts; the draw at y is the base draw at
    y - offset. ``stream`` separates independent fields sharing a seed.
    """

    master_seed: int
    law: Law
    nu: int = 1
    offset: tuple = None
    stream: int = 0

    def __post_init__(self):
        if self.nu < 1:
            raise InputError("nu must be positive")
        if self.offset is None:
            object.__setattr__(self, "offset", (0,) * self.nu)
        object.__setattr__(self, "offset", tuple(int(c) for c in self.offset))
        if len(self.offset) != self.nu:
            raise InputError("offset dimension does not match nu")
        object.__setattr__(self, "master_seed", int(self.master_seed) & 0xFFFFFFFFFFFFFFFF)

    def sample(self, x: Site) -> float:
        return float(self.sample_many([x])[0])

    def sample_many(self, sites) -> np.ndarray:
        pts = np.asarray([list(s) for s in sites], dtype=np.int64).reshape(-1, self.nu)
        if pts.shape[0] == 0:
            return np.empty(0)
        base = pts - np.asarray(self.offset, dtype=np.int64)
        h = hash_lanes(self.master_seed, self.stream, site_keys(base), self.law.lanes)
        return self.law.transform(h)

    def shift(self, x: Site) -> "DisorderField":
        x = tuple(int(c) for c in x)
        if len(x) != self.nu:
            raise InputError(f"shift {x} does not match nu = {self.nu}")
        return replace(self, offset=add(self.offset, x))

    def to_json(self) -> dict:
        return {"seed": self.master_seed, "law": self.law.to_json(), "offset": list(self.offset),
                "stream": self.stream}


def sample(field: DisorderField, x: Site) -> float:
    return field.sample(x)


def shift(field: DisorderField, x: Site) -> DisorderField:
    return field.shift(x)


def spatial_average(field: DisorderField, g: Callable = None, radius: int = 1, center: Site = None) -> float:
    """(1/|b(r)|) sum over the ball of g(sample(field, p)); g acts on arrays."""
    if radius < 1:
        raise InputError("radius must be >= 1")
    center = (0,) * field.nu if center is None else center
    vals = field.sample_many(ball(center, radius).sites)
    if g is not None:
        vals = np.asarray(g(vals), dtype=float)
    return float(np.mean(vals))


@dataclass(frozen=True)
class EnsembleSpec:
    seeds: tuple

    def __post_init__(self):
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise InputError("an ensemble needs at least one seed")
        if len(set(seeds)) != len(seeds):
            raise InputError("ensemble seeds must be pairwise distinct")
        object.__setattr__(self, "seeds", seeds)

    @property
    def n_samples(self) -> int:
        return len(self.seeds)

    @classmethod
    def from_master(cls, master: int, n_samples: int) -> "EnsembleSpec":
        """Derive n distinct 63-bit seeds from one master seed."""
        if n_samples < 1:
            raise InputError("n_samples must be positive")
        ss = np.random.SeedSequence(int(master))
        seeds, seen = [], set()
        while len(seeds) < n_samples:
            for s in ss.generate_state(n_samples, dtype=np.uint64).tolist():
                s &= 0x7FFFFFFFFFFFFFFF
                if s not in seen:
                    seen.add(s)
                    seeds.append(s)
            ss = ss.spawn(1)[0]
        return cls(tuple(seeds[:n_samples]))


def box_draws(field: DisorderField, volume: Volume) -> np.ndarray:
    return field.sample_many(volume.sites)
