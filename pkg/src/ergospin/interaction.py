"""Ergodic finite-range interactions built from germs.

A germ is a shape (a finite volume containing the origin) plus a builder that
turns the disorder draws on a translate of the shape into a self-adjoint
matrix. ``h(omega, Z)`` sums the builders of all germs whose shape translates
onto Z. Since the builder only sees draws, and draws of the shifted field on
Z + x are the draws of the original field on Z, covariance

    tau_x h(omega, Z) == h(theta_x omega, Z + x)

holds exactly, not merely to rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .config import TOL, ConstructionError, InputError, check_dense_dim
from .disorder import DisorderField
from .ffunction import FFunction, evaluate as F_eval
from .lattice import Site, Volume, add, ball, distance, neg, origin, translate
from .operators import PAULI, LocalOperator, embed, op_norm

Builder = Callable[[Optional[np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class Germ:
    shape: Volume
    builder: Builder = field(compare=False)
    channel: Optional[str] = None
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if origin(self.shape.nu) not in self.shape:
            raise InputError(f"germ shape {list(self.shape.sites)} must contain the origin")

    def anchor(self) -> Site:
        return self.shape.sites[0]

    def placed(self, Z: Volume) -> Optional[Site]:
        """Return x with shape + x == Z, or None."""
        if len(Z) != len(self.shape):
            return None
        x = add(Z.sites[0], neg(self.anchor()))
        return x if translate(self.shape, x) == Z else None

    def to_json(self) -> dict:
        out = {"shape": self.shape.to_json(), "kind": self.name}
        out.update(dict(self.params))
        if self.channel is not None:
            out["channel"] = self.channel
        return out


# ---------------------------------------------------------------------------
# built-in germ library


def _two_site(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def field_germ(nu: int = 1, axis: str = "z", scale: float = 1.0, channel: str = "default") -> Germ:
    """lambda_x * scale * sigma^axis_x."""
    mat = PAULI[axis] * scale

    def build(draws):
        return draws[0] * mat

    return Germ(Volume([origin(nu)]), build, channel, "field", (("axis", axis), ("scale", scale)))


def onsite_germ(v: np.ndarray, nu: int = 1, channel: Optional[str] = "default", name: str = "onsite") -> Germ:
    v = np.asarray(v, dtype=complex)

    def build(draws):
        return v if draws is None else draws[0] * v

    return Germ(Volume([origin(nu)]), build, channel, name)


def _bond_shape(nu: int, direction: int) -> Volume:
    e = [0] * nu
    e[direction] = 1
    return Volume([origin(nu), tuple(e)])


def _bond(nu, direction, mat, channel, name, params) -> Germ:
    def build(draws):
        # a random coupling uses the draw at the anchor site only
        return mat if draws is None else draws[0] * mat

    return Germ(_bond_shape(nu, direction), build, channel, name, params)


def xy_bond(mu: float = 1.0, gamma: float = 0.0, nu: int = 1, direction: int = 0, channel=None) -> Germ:
    """mu((1+gamma) XX + (1-gamma) YY)."""
    X, Y = PAULI["x"], PAULI["y"]
    mat = mu * ((1 + gamma) * _two_site(X, X) + (1 - gamma) * _two_site(Y, Y))
    return _bond(nu, direction, mat, channel, "xy", (("mu", mu), ("gamma", gamma)))


def xxz_bond(J: float = 1.0, delta: float = 1.0, nu: int = 1, direction: int = 0, channel=None) -> Germ:
    X, Y, Z = PAULI["x"], PAULI["y"], PAULI["z"]
    mat = J * (_two_site(X, X) + _two_site(Y, Y) + delta * _two_site(Z, Z))
    return _bond(nu, direction, mat, channel, "xxz", (("J", J), ("delta", delta)))


def heisenberg_bond(J: float = 1.0, nu: int = 1, direction: int = 0, channel=None) -> Germ:
    g = xxz_bond(J, 1.0, nu, direction, channel)
    return Germ(g.shape, g.builder, channel, "heisenberg", (("J", J),))


def ising_bond(J: float = 1.0, nu: int = 1, direction: int = 0, channel=None) -> Germ:
    Z = PAULI["z"]
    return _bond(nu, direction, J * _two_site(Z, Z), channel, "ising", (("J", J),))


def germ_from_json(spec: Mapping, nu: int) -> Germ:
    kind = spec.get("kind")
    shape = Volume.from_json(spec["shape"]) if "shape" in spec else None
    channel = spec.get("channel")
    if kind == "field":
        g = field_germ(nu, spec.get("axis", "z"), float(spec.get("scale", 1.0)), channel or "default")
    else:
        direction = 0
        if shape is not None and len(shape) == 2:
            diff = [abs(a - b) for a, b in zip(*shape.sites)]
            direction = diff.index(1) if sum(diff) == 1 else -1
            if direction < 0:
                raise InputError(f"bond shape must be a unit bond, got {spec['shape']}")
        if kind == "xy":
            g = xy_bond(float(spec.get("mu", 1.0)), float(spec.get("gamma", 0.0)), nu, direction, channel)
        elif kind == "xxz":
            g = xxz_bond(float(spec.get("J", 1.0)), float(spec.get("delta", 1.0)), nu, direction, channel)
        elif kind == "heisenberg":
            g = heisenberg_bond(float(spec.get("J", 1.0)), nu, direction, channel)
        elif kind == "ising":
            g = ising_bond(float(spec.get("J", 1.0)), nu, direction, channel)
        else:
            raise InputError(f"unknown germ kind {kind!r}")
    if shape is not None and shape != g.shape:
        raise InputError(f"shape {spec['shape']} does not fit germ kind {kind!r}")
    return g


# ---------------------------------------------------------------------------
# interactions


@dataclass(frozen=True)
class Interaction:
    germs: tuple
    fields: Mapping = field(default_factory=dict)
    k: int = 2

    def __post_init__(self):
        object.__setattr__(self, "germs", tuple(self.germs))
        object.__setattr__(self, "fields", dict(self.fields))
        nus = {g.shape.nu for g in self.germs}
        if len(nus) > 1:
            raise InputError("germs of one interaction must share the lattice dimension")
        for g in self.germs:
            if g.channel is not None and g.channel not in self.fields:
                raise InputError(f"germ {g.name!r} needs disorder channel {g.channel!r}")

    @property
    def nu(self) -> int:
        return self.germs[0].shape.nu if self.germs else next(iter(self.fields.values())).nu

    @property
    def range_bound(self) -> int:
        return max((g.shape.diameter() for g in self.germs), default=0)

    @property
    def is_deterministic(self) -> bool:
        return all(g.channel is None for g in self.germs)

    def shift(self, x: Site) -> "Interaction":
        """Same germs over theta_x omega."""
        return Interaction(self.germs, {c: f.shift(x) for c, f in self.fields.items()}, self.k)

    def reseeded(self, seed: int) -> "Interaction":
        """Same germs and laws with every field redrawn from ``seed``."""
        return Interaction(self.germs, {c: replace(f, master_seed=seed) for c, f in self.fields.items()}, self.k)

    def _draws(self, germ: Germ, Z: Volume):
        if germ.channel is None:
            return None
        return self.fields[germ.channel].sample_many(Z.sites)

    def germ_term(self, germ: Germ, Z: Volume) -> LocalOperator:
        m = np.asarray(germ.builder(self._draws(germ, Z)), dtype=complex)
        op = LocalOperator(Z, m, self.k)
        if not op.is_self_adjoint():
            raise ConstructionError(f"germ {germ.name!r} produced a non-self-adjoint term on {list(Z.sites)}")
        return op

    def evaluate(self, Z: Volume) -> LocalOperator:
        """h(omega, Z); the zero operator when no germ shape translates onto Z."""
        out = None
        for g in self.germs:
            if g.placed(Z) is None:
                continue
            t = self.germ_term(g, Z)
            out = t if out is None else LocalOperator(Z, out.matrix + t.matrix, self.k)
        return LocalOperator.zero(Z, self.k) if out is None else out

    def sets_containing(self, x: Site) -> list:
        """All Z with nonzero germ that contain x, in deterministic order."""
        seen, out = set(), []
        for g in self.germs:
            for s in g.shape:
                Z = translate(g.shape, add(x, neg(s)))
                if Z not in seen:
                    seen.add(Z)
                    out.append(Z)
        return out

    def sets_meeting(self, X: Volume) -> list:
        seen, out = set(), []
        for x in X:
            for Z in self.sets_containing(x):
                if Z not in seen:
                    seen.add(Z)
                    out.append(Z)
        return out

    def sets_within(self, volume: Volume) -> list:
        """Z inside ``volume`` carrying a germ, ordered by anchor site then germ."""
        seen, out = set(), []
        for p in volume:
            for g in self.germs:
                Z = translate(g.shape, add(p, neg(g.anchor())))
                if Z not in seen and Z.issubset(volume):
                    seen.add(Z)
                    out.append(Z)
        return out

    def to_json(self) -> dict:
        return {"germs": [g.to_json() for g in self.germs]}

    @classmethod
    def from_json(cls, spec: Mapping, fields: Mapping, nu: int, k: int = 2) -> "Interaction":
        if "germs" not in spec:
            raise InputError("interaction spec needs 'germs'")
        germs = [germ_from_json(g, nu) for g in spec["germs"]]
        return cls(tuple(germs), fields, k)


def evaluate(I: Interaction, Z: Volume) -> LocalOperator:
    return I.evaluate(Z)


@dataclass
class Hamiltonian:
    volume: Volume
    operator: LocalOperator
    term_index: dict

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    def norm(self) -> float:
        return op_norm(self.operator)


def _add_block(H: np.ndarray, m: np.ndarray, k: int, left: int, right: int) -> None:
    """H += 1_left (x) m (x) 1_right in place, through a diagonal view."""
    dl, dr, dz = k**left, k**right, m.shape[0]
    view = np.einsum("iajibj->iajb", H.reshape(dl, dz, dr, dl, dz, dr))
    view += m[None, :, None, :]


def assemble(I: Interaction, volume: Volume, cap: int | None = None) -> Hamiltonian:
    """H^Lambda = sum_{Z inside Lambda} h(omega, Z)."""
    if len(volume) == 0:
        raise InputError("cannot assemble on an empty volume")
    dim = check_dense_dim(I.k, len(volume), cap)
    H = np.zeros((dim, dim), dtype=complex)
    terms = {}
    n = len(volume)
    for Z in I.sets_within(volume):
        t = I.evaluate(Z)
        terms[Z] = t
        pos = [volume.index(s) for s in Z]
        if pos == list(range(pos[0], pos[0] + len(pos))):
            _add_block(H, t.matrix, I.k, pos[0], n - pos[-1] - 1)
        else:
            H += embed(t, volume).matrix
    return Hamiltonian(volume, LocalOperator(volume, H, I.k), terms)


# ---------------------------------------------------------------------------
# F-norms


@dataclass(frozen=True)
class FNormReport:
    value: float
    witness_pair: tuple
    pair_box_radius: int
    range_bound: int
    box_too_small: bool = False

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "witness_pair": [list(self.witness_pair[0]), list(self.witness_pair[1])],
            "pair_box_radius": self.pair_box_radius,
            "range_bound": self.range_bound,
            "box_too_small": self.box_too_small,
        }


def f_norm(
    I: Interaction,
    F: FFunction,
    pair_box_radius: int = 0,
    center: Site | None = None,
    within: Volume | None = None,
) -> FNormReport:
    """sup over x in the scan region, all y, of sum_{Z containing x,y} ||h(Z)|| / F(d(x,y)).

    For a finite-range interaction only pairs with d(x,y) <= range contribute,
    so the sup over x in a box is computed exactly. With ``within`` the scan
    runs over x in that volume and only Z inside it (the F-norm of the
    interaction restricted to the volume).
    """
    R = I.range_bound
    if within is not None:
        xs = within.sites
        radius = pair_box_radius
    else:
        center = origin(I.nu) if center is None else tuple(center)
        radius = pair_box_radius
        xs = ball(center, radius).sites
    small = within is None and radius < R
    if small:
        warnings.warn(f"pair box radius {radius} is smaller than interaction range {R}", stacklevel=2)
    norms: dict = {}
    best, pair = 0.0, (xs[0], xs[0]) if xs else ((), ())
    for x in xs:
        acc: dict = {}
        for Z in I.sets_containing(x):
            if within is not None and not Z.issubset(within):
                continue
            if Z not in norms:
                norms[Z] = op_norm(I.evaluate(Z))
            for y in Z:
                acc[y] = acc.get(y, 0.0) + norms[Z]
        for y, s in acc.items():
            v = s / F_eval(F, distance(x, y))
            if v > best:
                best, pair = v, (x, y)
    return FNormReport(best, pair, radius, R, small)


def rough_norm_bound(
    I: Interaction,
    F: FFunction,
    volume: Volume,
    n_f: float | None = None,
    diagonal_correction: bool = False,
) -> float:
    """2^{|L|-2} N_F sum_{x,y in L} F(d(x,y)).

    The count 2^{|L|-2} of subsets containing x and y is exact for x != y but
    halves the x == y terms; ``diagonal_correction`` adds the missing
    2^{|L|-2} |L| F(0), which makes the bound valid for every volume.
    """
    n = len(volume)
    if n > TOL.max_rough_sites:
        raise InputError(f"|volume| = {n} > {TOL.max_rough_sites}: the 2^|volume| factor overflows")
    if n_f is None:
        n_f = f_norm(I, F, within=volume).value
    pts = np.asarray([list(s) for s in volume.sites])
    d = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2)
    total = float(np.sum(F_eval(F, d)))
    if diagonal_correction:
        total += n * F_eval(F, 0)
    return math.ldexp(1.0, n - 2) * n_f * total


def perturb_with_field(phi: Interaction, v, field: DisorderField, channel: str = "perturbation") -> Interaction:
    """Psi(X) = Phi(X) + [|X| = 1] lambda_x tau_x(v) for deterministic Phi."""
    if not phi.is_deterministic:
        raise InputError("the unperturbed interaction must be deterministic")
    if isinstance(v, LocalOperator):
        if len(v.support) != 1:
            raise InputError("v must act on a single site")
        v = v.matrix
    v = np.asarray(v, dtype=complex)
    if np.max(np.abs(v - v.conj().T)) > TOL.algebraic * max(1.0, np.abs(v).max()):
        raise InputError("v must be self-adjoint")
    nu = field.nu
    germ = onsite_germ(v, nu, channel, name="perturbation")
    fields = dict(phi.fields)
    fields[channel] = field
    return Interaction(phi.germs + (germ,), fields, phi.k)
