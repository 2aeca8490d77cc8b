"""Dense finite-volume spin algebra.

A :class:`LocalOperator` is a k^n x k^n matrix together with its support, a
:class:`~ergospin.lattice.Volume` of n sites. Tensor legs follow the
lexicographic site order of the support, so translating an operator only
relabels its support and never touches the matrix.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .config import TOL, ConstructionError, InputError
from .lattice import Site, Volume, translate


# ---------------------------------------------------------------------------
# one-site matrices

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


@lru_cache(maxsize=None)
def _onsite_basis(k: int) -> tuple:
    """Matrices orthonormal under the normalized trace: Paulis for k=2, Weyl otherwise."""
    if k == 2:
        return (np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z)
    omega = np.exp(2j * np.pi / k)
    shift = np.roll(np.eye(k, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** np.arange(k))
    mats = []
    for a in range(k):
        for b in range(k):
            mats.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return tuple(mats)


def onsite_basis(k: int) -> list:
    return [m.copy() for m in _onsite_basis(k)]


# ---------------------------------------------------------------------------
# tensor-leg bookkeeping


def _permute_legs(matrix: np.ndarray, k: int, perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor legs: output leg j is input leg perm[j]."""
    n = len(perm)
    if list(perm) == list(range(n)):
        return matrix
    t = matrix.reshape((k,) * (2 * n))
    axes = list(perm) + [n + p for p in perm]
    return t.transpose(axes).reshape(k**n, k**n)


def _partial_trace(matrix: np.ndarray, k: int, n: int, keep_pos: Sequence[int]) -> np.ndarray:
    """Unnormalized trace over all legs not listed in keep_pos (order kept as given)."""
    trace_pos = [i for i in range(n) if i not in set(keep_pos)]
    m = _permute_legs(matrix, k, list(keep_pos) + trace_pos)
    dk, dt = k ** len(keep_pos), k ** len(trace_pos)
    return np.einsum("ajbj->ab", m.reshape(dk, dt, dk, dt))


class LocalOperator:
    """Matrix on the tensor product of k-dimensional sites of ``support``."""

    __slots__ = ("support", "matrix", "k")

    def __init__(self, support: Volume, matrix, k: int = 2):
        matrix = np.asarray(matrix, dtype=complex)
        dim = k ** len(support)
        if matrix.shape != (dim, dim):
            raise InputError(f"matrix shape {matrix.shape} does not match k^|support| = {dim}")
        self.support = support
        self.matrix = matrix
        self.k = k

    # -- constructors ------------------------------------------------------
    @classmethod
    def identity(cls, support: Volume, k: int = 2) -> "LocalOperator":
        return cls(support, np.eye(k ** len(support), dtype=complex), k)

    @classmethod
    def zero(cls, support: Volume, k: int = 2) -> "LocalOperator":
        d = k ** len(support)
        return cls(support, np.zeros((d, d), dtype=complex), k)

    @classmethod
    def onsite(cls, site: Site, matrix, k: int = 2) -> "LocalOperator":
        return cls(Volume([site]), matrix, k)

    @classmethod
    def product(cls, factors: dict, k: int = 2) -> "LocalOperator":
        """Tensor product of one-site matrices {site: matrix}."""
        support = Volume(factors)
        out = np.ones((1, 1), dtype=complex)
        for s in support:
            out = np.kron(out, factors[s])
        return cls(support, out, k)

    @classmethod
    def random(cls, support: Volume, rng: np.random.Generator, k: int = 2, hermitian: bool = False):
        d = k ** len(support)
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if hermitian:
            m = (m + m.conj().T) / 2
        return cls(support, m, k)

    # -- algebra -----------------------------------------------------------
    def _check_k(self, other: "LocalOperator") -> None:
        if other.k != self.k:
            raise InputError(f"on-site dimension mismatch: {self.k} vs {other.k}")

    def _joined(self, other: "LocalOperator"):
        self._check_k(other)
        if self.support == other.support:
            return self.matrix, other.matrix, self.support
        vol = self.support.union(other.support)
        return embed(self, vol).matrix, embed(other, vol).matrix, vol

    def __add__(self, other):
        if not isinstance(other, LocalOperator):
            return NotImplemented
        a, b, vol = self._joined(other)
        return LocalOperator(vol, a + b, self.k)

    def __sub__(self, other):
        if not isinstance(other, LocalOperator):
            return NotImplemented
        a, b, vol = self._joined(other)
        return LocalOperator(vol, a - b, self.k)

    def __neg__(self):
        return LocalOperator(self.support, -self.matrix, self.k)

    def __mul__(self, c):
        if isinstance(c, LocalOperator):
            return NotImplemented
        return LocalOperator(self.support, c * self.matrix, self.k)

    __rmul__ = __mul__

    def __matmul__(self, other):
        a, b, vol = self._joined(other)
        return LocalOperator(vol, a @ b, self.k)

    @property
    def dag(self) -> "LocalOperator":
        return LocalOperator(self.support, self.matrix.conj().T, self.k)

    def is_self_adjoint(self, tol: float = TOL.algebraic) -> bool:
        # entrywise check; cheap and scale aware
        m = self.matrix
        scale = max(float(np.abs(m).max(initial=0.0)), 1.0)
        return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol * scale)

    def norm(self) -> float:
        return op_norm(self)

    def allclose(self, other: "LocalOperator", atol: float = TOL.algebraic) -> bool:
        a, b, _ = self._joined(other)
        return bool(np.max(np.abs(a - b), initial=0.0) <= atol)

    def __repr__(self) -> str:
        return f"LocalOperator(support={list(self.support.sites)}, k={self.k})"

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        flat = self.matrix.reshape(-1)
        entries = np.empty(2 * flat.size)
        entries[0::2] = flat.real
        entries[1::2] = flat.imag
        return {"support": self.support.to_json(), "k": self.k, "entries": entries.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "LocalOperator":
        support = Volume.from_json(data["support"])
        k = int(data["k"])
        e = np.asarray(data["entries"], dtype=float)
        d = k ** len(support)
        if e.size != 2 * d * d:
            raise InputError("entry count does not match support and k")
        m = (e[0::2] + 1j * e[1::2]).reshape(d, d)
        return cls(support, m, k)


def commutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    x, y, vol = a._joined(b)
    return LocalOperator(vol, x @ y - y @ x, a.k)


def embed(a: LocalOperator, into: Volume) -> LocalOperator:
    """a tensor identity on ``into`` minus support(a)."""
    if a.support == into:
        return a
    if not a.support.issubset(into):
        raise InputError(f"support {list(a.support.sites)} is not contained in {list(into.sites)}")
    k = a.k
    pos = [into.index(s) for s in a.support]
    rest = [i for i in range(len(into)) if i not in set(pos)]
    full = np.kron(a.matrix, np.eye(k ** len(rest), dtype=complex))
    order = pos + rest  # input leg i sits at output position order[i]
    inv = np.argsort(order)
    return LocalOperator(into, _permute_legs(full, k, inv), k)


def translate_op(a: LocalOperator, x: Site) -> LocalOperator:
    """tau_x(a): the same matrix on the shifted support (lex order is shift invariant)."""
    return LocalOperator(translate(a.support, x), a.matrix, a.k)


def tracial_state(a: LocalOperator) -> complex:
    return complex(np.trace(a.matrix) / a.matrix.shape[0])


def conditional_expectation(a: LocalOperator, onto: Volume) -> LocalOperator:
    """Normalized partial trace of ``a`` over its support outside ``onto``."""
    if not onto.issubset(a.support):
        a = embed(a, a.support.union(onto))
    if a.support == onto:
        return a
    pos = [a.support.index(s) for s in onto]
    n = len(a.support)
    traced = n - len(pos)
    m = _partial_trace(a.matrix, a.k, n, pos) / a.k**traced
    return LocalOperator(onto, m, a.k)


def op_norm(a: LocalOperator) -> float:
    """Largest singular value."""
    m = a.matrix
    if m.size == 0:
        return 0.0
    if m.shape[0] > 64:
        skew = 0.5 * (m - m.conj().T)
        s = float(np.linalg.norm(skew))  # Frobenius, bounds the 2-norm of the skew part
        if s <= 1e-13 * max(1.0, float(np.abs(m).max())):
            # Hermitian up to rounding: the eigenvalue route is several times cheaper than an SVD
            return float(np.max(np.abs(eigh_hermitian(m - skew, values_only=True))))
    return float(np.linalg.norm(m, 2))


def pauli_basis(volume: Volume, k: int = 2) -> list:
    """Tensor products of one-site generalized Paulis; orthonormal under the tracial state."""
    one = _onsite_basis(k)
    ops = []
    for combo in itertools.product(range(len(one)), repeat=len(volume)):
        m = np.ones((1, 1), dtype=complex)
        for c in combo:
            m = np.kron(m, one[c])
        ops.append(LocalOperator(volume, m, k))
    return ops


def pauli_string(spec: dict, k: int = 2) -> LocalOperator:
    """Build e.g. {(0,): 'x', (1,): 'z'} into sigma^x_0 sigma^z_1 (k=2 only)."""
    if k != 2:
        raise InputError("named Pauli strings need k = 2")
    return LocalOperator.product({tuple(s): PAULI[p] for s, p in spec.items()}, k)


# ---------------------------------------------------------------------------
# states


class StateFunctional:
    """Density matrix on a finite volume, acting as a -> Tr(rho a)."""

    __slots__ = ("volume", "rho", "k")

    def __init__(self, volume: Volume, rho, k: int = 2, check: bool = True):
        rho = np.asarray(rho, dtype=complex)
        d = k ** len(volume)
        if rho.shape != (d, d):
            raise InputError(f"density matrix shape {rho.shape} does not match k^|volume| = {d}")
        self.volume = volume
        self.rho = rho
        self.k = k
        if check:
            self.validate()

    def validate(self, tol: float = TOL.algebraic) -> None:
        r = self.rho
        if np.max(np.abs(r - r.conj().T), initial=0.0) > tol:
            raise ConstructionError("density matrix is not self-adjoint")
        if abs(np.trace(r) - 1.0) > tol * max(1, r.shape[0]):
            raise ConstructionError(f"density matrix has trace {np.trace(r)}")
        if np.linalg.eigvalsh(r)[0] < -tol * max(1, r.shape[0]):
            raise ConstructionError("density matrix is not positive")

    def __call__(self, a: LocalOperator) -> complex:
        if not a.support.issubset(self.volume):
            raise InputError("observable support is not contained in the state's volume")
        red = self.restrict(a.support)
        return complex(np.sum(red.rho.T * a.matrix))

    def restrict(self, sub: Volume) -> "StateFunctional":
        """Marginal on ``sub``; equals k^m times the conditional expectation of rho."""
        if sub == self.volume:
            return self
        if not sub.issubset(self.volume):
            raise InputError("restriction volume is not contained in the state's volume")
        pos = [self.volume.index(s) for s in sub]
        m = _partial_trace(self.rho, self.k, len(self.volume), pos)
        return StateFunctional(sub, m, self.k, check=False)

    def translate(self, x: Site) -> "StateFunctional":
        return StateFunctional(translate(self.volume, x), self.rho, self.k, check=False)

    def expectation_matrix(self) -> np.ndarray:
        return self.rho

    @classmethod
    def from_vector(cls, volume: Volume, psi, k: int = 2) -> "StateFunctional":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(volume, np.outer(psi, psi.conj()), k)

    @classmethod
    def tracial(cls, volume: Volume, k: int = 2) -> "StateFunctional":
        d = k ** len(volume)
        return cls(volume, np.eye(d, dtype=complex) / d, k)


def product_state(parts: Iterable[StateFunctional]) -> StateFunctional:
    """Tensor product of states on pairwise disjoint volumes."""
    parts = list(parts)
    if not parts:
        raise InputError("need at least one factor")
    k = parts[0].k
    sites, rho = [], np.ones((1, 1), dtype=complex)
    for p in parts:
        if set(sites) & set(p.volume.sites):
            raise InputError("product state factors must have disjoint volumes")
        sites.extend(p.volume.sites)
        rho = np.kron(rho, p.rho)
    vol = Volume(sites)
    # input leg i (in concatenation order) lands at vol.index(sites[i])
    inv = np.argsort([vol.index(s) for s in sites])
    return StateFunctional(vol, _permute_legs(rho, k, inv), k, check=False)


def mix_states(states: Sequence[StateFunctional], weights=None) -> StateFunctional:
    vol = states[0].volume
    if any(s.volume != vol for s in states):
        raise InputError("mixed states must live on the same volume")
    w = np.full(len(states), 1.0 / len(states)) if weights is None else np.asarray(weights, float)
    rho = sum(wi * s.rho for wi, s in zip(w, states))
    return StateFunctional(vol, rho, states[0].k, check=False)


def eigh_hermitian(M: np.ndarray, values_only: bool = False):
    """np.linalg.eigh, through the cheaper real routine when M has no imaginary part."""
    if np.iscomplexobj(M) and not np.any(M.imag):
        M = M.real
    if values_only:
        return np.linalg.eigvalsh(M)
    e, V = np.linalg.eigh(M)
    return e, V.astype(complex, copy=False)
