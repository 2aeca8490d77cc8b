"""Heisenberg dynamics, Lieb-Robinson certificates and Duhamel traces.

Convention: U(t) = exp(-itH) and alpha_t(a) = U(-t) a U(t) = e^{itH} a e^{-itH}.
Evolution goes through one Hermitian eigendecomposition per Hamiltonian, which
then serves every time on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import TOL, ConstructionError, InputError, check_dense_dim
from .disorder import DisorderField
from .ffunction import FFunction, convolution_constant, pair_sum
from .interaction import Hamiltonian, Interaction, assemble, f_norm
from .lattice import BoxSequence, Volume
from .operators import LocalOperator, commutator, eigh_hermitian, embed, op_norm


class Evolver:
    """Caches the eigendecomposition of one finite-volume Hamiltonian."""

    def __init__(self, H: Hamiltonian, cap: int | None = None):
        check_dense_dim(H.operator.k, len(H.volume), cap)
        if not H.operator.is_self_adjoint():
            raise ConstructionError("Hamiltonian is not self-adjoint")
        self.H = H
        self.volume = H.volume
        self.k = H.operator.k
        self.energies, self.vectors = eigh_hermitian(H.matrix)

    def unitary(self, t: float) -> np.ndarray:
        """U(t) = exp(-itH)."""
        V = self.vectors
        return (V * np.exp(-1j * t * self.energies)) @ V.conj().T

    def heisenberg(self, a: LocalOperator, t: float) -> LocalOperator:
        A = embed(a, self.volume)
        if t == 0:
            return A
        V = self.vectors
        ph = np.exp(1j * t * self.energies)
        B = V.conj().T @ A.matrix @ V
        B = ph[:, None] * B * ph.conj()[None, :]
        return LocalOperator(self.volume, V @ B @ V.conj().T, self.k)


@dataclass
class EvolvedObservable:
    base: LocalOperator
    volume: Volume
    time: float
    result: LocalOperator


def evolve(H: Hamiltonian, a: LocalOperator, t: float, evolver: Evolver | None = None) -> EvolvedObservable:
    if not a.support.issubset(H.volume):
        raise InputError("observable support is not inside the Hamiltonian's volume")
    ev = evolver or Evolver(H)
    return EvolvedObservable(a, H.volume, float(t), ev.heisenberg(a, t))


# ---------------------------------------------------------------------------
# Lieb-Robinson


@dataclass
class LRCertificate:
    a_support: Volume
    b_support: Volume
    time_grid: list
    lhs: list
    rhs: list
    cf_bound: float
    n_f: float
    passed: bool

    def rows(self, seed=None) -> list:
        return [
            {"seed": seed, "t": t, "lhs": l, "rhs": r, "margin": r - l}
            for t, l, r in zip(self.time_grid, self.lhs, self.rhs)
        ]

    def to_json(self) -> dict:
        return {
            "a_support": self.a_support.to_json(),
            "b_support": self.b_support.to_json(),
            "time_grid": list(self.time_grid),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "cf_bound": self.cf_bound,
            "n_f": self.n_f,
            "passed": self.passed,
        }


def lr_rhs(norm_a, norm_b, n_f, cf, t, fsum) -> float:
    """(|a||b|/C_F)(e^{N C_F |t|} - 1) sum F."""
    x = n_f * cf * abs(t)
    growth = math.expm1(x) if x < 700 else math.inf
    return norm_a * norm_b / cf * growth * fsum


def lr_certify(
    I: Interaction,
    F: FFunction,
    volume: Volume,
    a: LocalOperator,
    b: LocalOperator,
    times: Sequence[float],
    cf: float | None = None,
    evolver: Evolver | None = None,
) -> LRCertificate:
    """Compare ||[b, alpha_t(a)]|| with the Lieb-Robinson bound on a time grid.

    The right-hand side uses the analytic upper bound on C_F and the F-norm of
    the interaction restricted to ``volume`` (the only terms the finite-volume
    dynamics sees).
    """
    if not a.support.isdisjoint(b.support):
        raise InputError("supports of a and b must be disjoint")
    if not (a.support.issubset(volume) and b.support.issubset(volume)):
        raise InputError("supports of a and b must lie inside the volume")
    if cf is None:
        cf = convolution_constant(F, 20).bound
    n_f = f_norm(I, F, within=volume).value
    ev = evolver or Evolver(assemble(I, volume))
    fsum = pair_sum(F, a.support, b.support)
    na, nb = op_norm(a), op_norm(b)
    bE = embed(b, volume)
    lhs, rhs = [], []
    for t in times:
        at = ev.heisenberg(a, t)
        lhs.append(op_norm(commutator(bE, at)))
        rhs.append(lr_rhs(na, nb, n_f, cf, t, fsum))
    passed = all(l <= r * (1 + TOL.lr_relative) for l, r in zip(lhs, rhs))
    return LRCertificate(a.support, b.support, [float(t) for t in times], lhs, rhs, cf, n_f, passed)


# ---------------------------------------------------------------------------
# thermodynamic limit


@dataclass
class ConvergenceTrace:
    observable: LocalOperator
    time: float
    volumes: list
    deltas: list
    duhamel_bounds: list
    n_f: float
    cf_bound: float

    @property
    def passed(self) -> bool:
        return all(d <= b * (1 + TOL.lr_relative) for d, b in zip(self.deltas, self.duhamel_bounds))

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.deltas, self.deltas[1:]))

    def to_json(self) -> dict:
        return {
            "time": self.time,
            "sizes": [len(v) for v in self.volumes],
            "deltas": list(self.deltas),
            "duhamel_bounds": list(self.duhamel_bounds),
            "n_f": self.n_f,
            "cf_bound": self.cf_bound,
            "passed": self.passed,
            "monotone": self.monotone,
        }


def duhamel_bound(norm_a: float, n_f: float, cf: float, t: float, fsum: float) -> float:
    """|a| N int_0^|t| (e^{N C_F s} - 1) ds  sum_{x in X, p in new shell} F(d(x,p))."""
    c = n_f * cf
    T = abs(t)
    if c == 0.0 or T == 0.0:
        return 0.0
    x = c * T
    integral = (math.expm1(x) - x) / c if x < 700 else math.inf
    return norm_a * n_f * integral * fsum


def thermo_trace(
    I: Interaction,
    F: FFunction,
    a: LocalOperator,
    t: float,
    boxes: BoxSequence | Sequence[Volume],
    cf: float | None = None,
) -> ConvergenceTrace:
    """Successive differences of alpha^{Lambda_n}_t(a) along nested volumes."""
    vols = boxes.volumes() if isinstance(boxes, BoxSequence) else list(boxes)
    if len(vols) < 2:
        raise InputError("need at least two nested volumes")
    for small, big in zip(vols, vols[1:]):
        if not small.issubset(big):
            raise InputError("volumes must be nested")
    if not a.support.issubset(vols[0]):
        raise InputError("observable support must lie in the smallest volume")
    check_dense_dim(I.k, len(vols[-1]))
    for small, big in zip(vols, vols[1:]):
        for Z in I.sets_within(big):
            if not Z.issubset(small) and not Z.isdisjoint(a.support):
                raise InputError(f"term on {list(Z.sites)} crosses the boundary and touches the observable")
    if cf is None:
        cf = convolution_constant(F, 20).bound
    n_f = f_norm(I, F, within=vols[-1]).value
    na = op_norm(a)
    evolved = [Evolver(assemble(I, v)).heisenberg(a, t) for v in vols]
    deltas, bounds = [], []
    for m, n in zip(range(len(vols) - 1), range(1, len(vols))):
        diff = evolved[n] - embed(evolved[m], vols[n])
        deltas.append(op_norm(diff))
        shell = vols[n].difference(vols[m])
        bounds.append(duhamel_bound(na, n_f, cf, t, pair_sum(F, a.support, shell)))
    return ConvergenceTrace(a, float(t), vols, deltas, bounds, n_f, cf)


# ---------------------------------------------------------------------------
# gauge transformation for one-site random perturbations


def _onsite_exp(v: np.ndarray, theta: float) -> np.ndarray:
    """exp(i theta v) for self-adjoint v."""
    e, W = np.linalg.eigh(v)
    return (W * np.exp(1j * theta * e)) @ W.conj().T


def gauge_unitary(v, field: DisorderField, volume: Volume, t: float, k: int = 2) -> LocalOperator:
    """T^Lambda(t) = tensor_x exp(i t lambda_x v_x)."""
    v = v.matrix if isinstance(v, LocalOperator) else np.asarray(v, dtype=complex)
    lam = field.sample_many(volume.sites)
    m = np.ones((1, 1), dtype=complex)
    for lx in lam:
        m = np.kron(m, _onsite_exp(v, t * lx))
    return LocalOperator(volume, m, k)


def gauge_transform(phi: Interaction, v, field: DisorderField, Z: Volume, t: float) -> LocalOperator:
    """Phi~(Z, t) = T^Z(t)^* Phi(Z) T^Z(t)."""
    term = phi.evaluate(Z)
    if t == 0:
        return term
    T = gauge_unitary(v, field, Z, t, phi.k).matrix
    return LocalOperator(Z, T.conj().T @ term.matrix @ T, phi.k)


def split_perturbed(psi: Interaction):
    """Recover (Phi, v, field) from an interaction made by perturb_with_field."""
    pert = [g for g in psi.germs if g.name == "perturbation"]
    if len(pert) != 1:
        raise InputError("interaction was not built by perturb_with_field")
    g = pert[0]
    rest = tuple(h for h in psi.germs if h is not g)
    fields = {c: f for c, f in psi.fields.items() if c != g.channel}
    phi = Interaction(rest, fields, psi.k)
    return phi, np.asarray(g.builder(None)), psi.fields[g.channel]


def gauged_evolution(
    phi: Interaction,
    v,
    field: DisorderField,
    volume: Volume,
    a: LocalOperator,
    t: float,
    n_steps: int | None = None,
) -> LocalOperator:
    """alpha~_t(a) = X a X^* with X' = i Phi~(s) X, X(0) = 1.

    Phi~(s) = T(s)^* H_Phi T(s) is the gauge-transformed deterministic
    Hamiltonian; X is integrated with the fourth-order Gauss-Legendre Magnus
    scheme in the eigenbasis of the one-site perturbation, never touching the
    eigendecomposition of the full perturbed Hamiltonian.
    """
    v = v.matrix if isinstance(v, LocalOperator) else np.asarray(v, dtype=complex)
    k = phi.k
    A = embed(a, volume).matrix
    if t == 0:
        return LocalOperator(volume, A, k)
    H_phi = assemble(phi, volume).matrix
    e, W1 = np.linalg.eigh(v)
    lam = field.sample_many(volume.sites)
    Q = np.ones((1, 1), dtype=complex)
    eps = np.zeros(1)
    for lx in lam:
        Q = np.kron(Q, W1)
        eps = (eps[:, None] + lx * e[None, :]).reshape(-1)
    K = Q.conj().T @ H_phi @ Q
    gap = eps[:, None] - eps[None, :]
    if n_steps is None:
        scale = (np.linalg.norm(H_phi, 2) + np.max(np.abs(gap), initial=0.0)) * abs(t)
        n_steps = max(64, int(math.ceil(60.0 * scale)))
    h = t / n_steps
    c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
    X = np.eye(K.shape[0], dtype=complex)
    for j in range(n_steps):
        s0 = j * h
        K1 = K * np.exp(-1j * (s0 + c1 * h) * gap)
        K2 = K * np.exp(-1j * (s0 + c2 * h) * gap)
        # Omega = h/2 (A1+A2) + sqrt(3) h^2/12 [A2, A1] with A = iK; Omega = i * herm
        herm = 0.5 * h * (K1 + K2) + 1j * (math.sqrt(3) * h * h / 12.0) * (K2 @ K1 - K1 @ K2)
        herm = 0.5 * (herm + herm.conj().T)
        mu, P = np.linalg.eigh(herm)
        X = ((P * np.exp(1j * mu)) @ P.conj().T) @ X
    Xf = Q @ X @ Q.conj().T
    return LocalOperator(volume, Xf @ A @ Xf.conj().T, k)


@dataclass
class GaugeCheck:
    lhs: float
    rhs: float
    residual: float
    time: float
    sizes: tuple

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "time": self.time, "sizes": list(self.sizes)}


def gauge_identity_check(
    psi: Interaction,
    volumes: Sequence[Volume],
    a: LocalOperator,
    t: float,
    n_steps: int | None = None,
) -> GaugeCheck:
    """Compare ||alpha^{n,Psi}_t(a) - alpha^{m,Psi}_t(a)|| computed directly with
    the same quantity through the gauge-transformed dynamics."""
    inner, outer = volumes
    if not inner.issubset(outer) or not a.support.issubset(inner):
        raise InputError("need support(a) inside inner inside outer")
    check_dense_dim(psi.k, len(outer))
    phi, v, fld = split_perturbed(psi)
    direct_n = Evolver(assemble(psi, outer)).heisenberg(a, t)
    direct_m = Evolver(assemble(psi, inner)).heisenberg(a, t)
    lhs = op_norm(direct_n - embed(direct_m, outer))
    g_n = gauged_evolution(phi, v, fld, outer, a, t, n_steps)
    g_m = gauged_evolution(phi, v, fld, inner, a, t, n_steps)
    rhs = op_norm(g_n - embed(g_m, outer))
    return GaugeCheck(lhs, rhs, abs(lhs - rhs), float(t), (len(inner), len(outer)))
