"""Finite-volume ground states, the derivation delta and Cesaro-averaged states.

The averaged states need a ground state gamma_w defined for every disorder
realization w, not just on one box. We use the tiled proxy: tile Z^nu by
translates of b_0(R), take the product of the tile ground states, and average
over all (2R+1)^nu tile offsets. This is a genuine state-valued function of w,
so the re-indexing argument behind the covariance defect bound applies to it
verbatim, and for translation-invariant deterministic models it is itself
translation invariant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, ConstructionError, InputError, check_dense_dim
from .interaction import Hamiltonian, Interaction, assemble
from .lattice import Site, Volume, add, ball, interior, neg, origin, translate
from .operators import (
    LocalOperator,
    StateFunctional,
    commutator,
    eigh_hermitian,
    mix_states,
    op_norm,
    product_state,
    translate_op,
)


@dataclass
class GroundStateResult:
    state: StateFunctional
    energy: float
    gap: float
    degenerate: bool
    multiplicity: int = 1

    def to_row(self) -> dict:
        return {"energy": self.energy, "gap": self.gap, "degenerate": self.degenerate,
                "multiplicity": self.multiplicity}


def ground_state(H: Hamiltonian, tol_gap: float | None = None) -> GroundStateResult:
    """Lowest eigenvalue of H and the normalized projection onto its eigenspace.

    Eigenvalues within ``tol_gap`` of the minimum count as degenerate; the
    default tolerance is 1e-10 ||H|| (at least 1e-12).
    """
    M = H.matrix
    if np.max(np.abs(M - M.conj().T), initial=0.0) > TOL.algebraic * max(1.0, np.abs(M).max()):
        raise ConstructionError("Hamiltonian is not self-adjoint")
    try:
        e, V = eigh_hermitian(M)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(M)
        raise ConstructionError(f"eigensolver failed (condition number {cond:.3e}): {exc}") from exc
    scale = float(np.max(np.abs(e))) if e.size else 0.0
    if tol_gap is None:
        tol_gap = max(1e-10 * scale, 1e-12)
    e0 = float(e[0])
    mult = int(np.sum(e - e0 < tol_gap))
    gap = float(e[1] - e0) if e.size > 1 else 0.0
    P = V[:, :mult] @ V[:, :mult].conj().T / mult
    P = 0.5 * (P + P.conj().T)
    state = StateFunctional(H.volume, P, H.operator.k, check=False)
    return GroundStateResult(state, e0, gap, gap < tol_gap, mult)


def thermal_state(H: Hamiltonian, beta: float) -> StateFunctional:
    """Gibbs state exp(-beta H) / Tr exp(-beta H)."""
    if beta < 0:
        raise InputError("beta must be non-negative")
    e, V = eigh_hermitian(H.matrix)
    w = np.exp(-beta * (e - e[0]))
    w /= w.sum()
    rho = (V * w) @ V.conj().T
    return StateFunctional(H.volume, 0.5 * (rho + rho.conj().T), H.operator.k, check=False)


# ---------------------------------------------------------------------------
# the derivation and the ground state condition


@dataclass
class DerivationImage:
    input: LocalOperator
    output: LocalOperator
    terms: list = field(default_factory=list)


def derivation(I: Interaction, env: Volume, a: LocalOperator) -> DerivationImage:
    """delta(a) = sum over Z meeting support(a) of [i h(Z), a].

    Every interacting Z that meets the support has to lie inside ``env``;
    otherwise the sum would be silently truncated.
    """
    Zs = I.sets_meeting(a.support)
    for Z in Zs:
        if not Z.issubset(env):
            raise InputError(f"interacting set {list(Z.sites)} is not contained in the environment volume")
    vol = a.support
    for Z in Zs:
        vol = vol.union(Z)
    out = LocalOperator.zero(vol, a.k)
    for Z in Zs:
        out = out + commutator(I.evaluate(Z) * 1j, a)
    return DerivationImage(a, out, Zs)


@dataclass
class GroundConditionReport:
    worst_violation: float
    values: list
    boundary_slack: float
    n_trials: int

    def passed(self, tol: float = TOL.ground_condition) -> bool:
        return self.worst_violation >= -tol - self.boundary_slack

    def to_json(self) -> dict:
        return {"worst_violation": self.worst_violation, "boundary_slack": self.boundary_slack,
                "n_trials": self.n_trials}


def ground_condition_value(state: StateFunctional, I: Interaction, a: LocalOperator, env: Volume | None = None) -> float:
    """Real part of -i state(a^* delta(a))."""
    env = state.volume if env is None else env
    d = derivation(I, env, a).output
    return float((-1j * state(a.dag @ d)).real)


def ground_state_condition(
    state: StateFunctional,
    I: Interaction,
    env: Volume | None = None,
    trials: int = 200,
    rng: np.random.Generator | None = None,
    support_radius: int = 1,
    observables=None,
) -> GroundConditionReport:
    """Worst value of -i state(a^* delta(a)) over random interior observables.

    Interior means every interacting set meeting support(a) lies inside the
    state's volume, so no term of delta is cut off and the boundary slack is
    zero. Explicit ``observables`` may reach the boundary; for them the slack
    adds 2 ||h(Z)|| ||a||^2 over the missing sets.
    """
    env = state.volume if env is None else env
    rng = np.random.default_rng(0) if rng is None else rng
    if observables is None:
        inner = interior(env, I.range_bound)
        if len(inner) == 0:
            raise InputError("the volume has no interior sites at this interaction range")
        observables = []
        for _ in range(trials):
            p = inner.sites[rng.integers(len(inner))]
            supp = ball(p, support_radius).intersection(inner)
            a = LocalOperator.random(supp, rng, state.k)
            observables.append(a * (1.0 / op_norm(a)))
    values, slack = [], 0.0
    for a in observables:
        inside = [Z for Z in I.sets_meeting(a.support) if Z.issubset(env)]
        missing = [Z for Z in I.sets_meeting(a.support) if not Z.issubset(env)]
        d = LocalOperator.zero(a.support, a.k)
        for Z in inside:
            d = d + commutator(I.evaluate(Z) * 1j, a)
        values.append(float((-1j * state(a.dag @ d)).real))
        na = op_norm(a)
        s = sum(2.0 * op_norm(I.evaluate(Z)) * na * na for Z in missing)
        slack = max(slack, s)
    return GroundConditionReport(min(values), values, slack, len(values))


# ---------------------------------------------------------------------------
# Cesaro averages over disorder-shifted ground states


class TiledGroundStates:
    """Tile ground states of one interaction, cached in the frame of w.

    By covariance H^T at theta_q w has the same matrix as H^{T - q} at w, so
    the tile state at theta_q w is the cached state on T - q moved by q.
    """

    def __init__(self, I: Interaction, radius: int, tol_gap: float | None = None):
        if radius < 0:
            raise InputError("tile radius must be non-negative")
        check_dense_dim(I.k, (2 * radius + 1) ** I.nu)
        self.I = I
        self.radius = radius
        self.tol_gap = tol_gap
        self._cache: dict = {}
        self.solves = 0

    @property
    def period(self) -> int:
        return 2 * self.radius + 1

    def tile_state(self, tile: Volume, q: Site) -> StateFunctional:
        key = translate(tile, neg(q))
        st = self._cache.get(key)
        if st is None:
            st = ground_state(assemble(self.I, key), self.tol_gap).state
            self._cache[key] = st
            self.solves += 1
        return st.translate(q)

    def _tile_center(self, y: Site, offset: tuple) -> Site:
        P, R = self.period, self.radius
        return tuple(s + P * ((c - s + R) // P) for c, s in zip(y, offset))

    def state(self, q: Site, target: Volume) -> StateFunctional:
        """gamma at theta_q w, restricted to ``target``."""
        P = self.period
        parts = []
        for offset in itertools.product(range(P), repeat=self.I.nu):
            centers = sorted({self._tile_center(y, offset) for y in target})
            factors = []
            for c in centers:
                tile = ball(c, self.radius)
                piece = target.intersection(tile)
                factors.append(self.tile_state(tile, q).restrict(piece))
            parts.append(product_state(factors))
        return mix_states(parts)


@dataclass
class AveragedState:
    base_states: dict
    radius: int
    combined: StateFunctional
    tile_radius: int


def cesaro_average(
    I: Interaction,
    n: int,
    eval_volume: Volume,
    base_volume_radius: int,
    tiles: TiledGroundStates | None = None,
    frame: Site | None = None,
) -> AveragedState:
    """gamma^(n) = |b_0(n)|^-1 sum_{p in b_0(n)} gamma_{theta_p w} o tau_{-p} on eval_volume.

    ``frame`` evaluates the average at theta_frame w while reusing the tile
    cache of w (pass the same ``tiles`` for both).
    """
    if n < 0:
        raise InputError("n must be non-negative")
    nu = I.nu
    frame = origin(nu) if frame is None else tuple(frame)
    tiles = TiledGroundStates(I, base_volume_radius) if tiles is None else tiles
    if tiles.radius != base_volume_radius:
        raise InputError("tile cache radius does not match base_volume_radius")
    base = {}
    for p in ball(origin(nu), n):
        q = add(frame, p)
        st = tiles.state(q, translate(eval_volume, neg(p)))
        base[p] = st.translate(p)
    combined = mix_states(list(base.values()))
    combined.validate(1e-10)
    return AveragedState(base, n, combined, base_volume_radius)


def symmetric_difference_ratio(nu: int, n: int, z: Site) -> float:
    """|b_0(n) symmetric-difference b_z(n)| / |b_0(n)|."""
    b0 = ball(origin(nu), n)
    bz = ball(z, n)
    return len(b0.symmetric_difference(bz)) / len(b0)


@dataclass
class CovarianceDefect:
    n: int
    defect: float
    bound: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.bound + self.slack + 1e-12

    def to_json(self) -> dict:
        return {"n": self.n, "defect": self.defect, "bound": self.bound, "slack": self.slack}


def covariance_defect(
    I: Interaction,
    n: int,
    z: Site,
    a: LocalOperator,
    base_volume_radius: int,
    tiles: TiledGroundStates | None = None,
    slack_tiles: TiledGroundStates | None = None,
) -> CovarianceDefect:
    """|gamma^(n)_{theta_z w}(a) - gamma^(n)_w(tau_z a)| against ||a|| |b_0(n) D b_z(n)| / |b_0(n)|.

    The slack is the empirical restriction error: how much gamma^(n)_w(tau_z a)
    moves when the tiles grow by one site in every direction.
    """
    z = tuple(z)
    if max(abs(c) for c in z) != 1:
        raise InputError("z must be a unit lattice vector")
    tiles = TiledGroundStates(I, base_volume_radius) if tiles is None else tiles
    E = a.support
    lhs = cesaro_average(I, n, E, base_volume_radius, tiles, frame=z).combined(a)
    az = translate_op(a, z)
    rhs = cesaro_average(I, n, az.support, base_volume_radius, tiles).combined(az)
    bound = op_norm(a) * symmetric_difference_ratio(I.nu, n, z)
    slack_tiles = TiledGroundStates(I, base_volume_radius + 1) if slack_tiles is None else slack_tiles
    wider = cesaro_average(I, n, az.support, base_volume_radius + 1, slack_tiles).combined(az)
    return CovarianceDefect(n, abs(lhs - rhs), bound, abs(wider - rhs))
