import functools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergospin.config import ConstructionError, InputError
from ergospin.lattice import Volume, ball, chain
from ergospin.operators import (
    PAULI,
    SIGMA_X,
    SIGMA_Z,
    LocalOperator,
    StateFunctional,
    commutator,
    conditional_expectation,
    embed,
    mix_states,
    onsite_basis,
    op_norm,
    pauli_basis,
    pauli_string,
    product_state,
    tracial_state,
    translate_op,
)

I2 = np.eye(2)


def kron_all(mats):
    return functools.reduce(np.kron, mats)


def test_embed_matches_explicit_kron():
    a = LocalOperator.onsite((1,), SIGMA_X)
    got = embed(a, chain(3)).matrix
    np.testing.assert_array_equal(got, kron_all([I2, SIGMA_X, I2]))


def test_embed_non_contiguous_support(rng):
    m = rng.normal(size=(4, 4))
    a = LocalOperator(Volume([(0,), (2,)]), m)
    got = embed(a, chain(3)).matrix
    # reference: apply to product basis vectors
    ref = np.zeros((8, 8), dtype=complex)
    for col in range(8):
        b = [(col >> (2 - j)) & 1 for j in range(3)]
        for row in range(8):
            c = [(row >> (2 - j)) & 1 for j in range(3)]
            if b[1] == c[1]:
                ref[row, col] = m[2 * c[0] + c[2], 2 * b[0] + b[2]]
    np.testing.assert_allclose(got, ref)


def test_product_orders_by_site():
    a = pauli_string({(1,): "z", (0,): "x"})
    np.testing.assert_array_equal(a.matrix, np.kron(SIGMA_X, SIGMA_Z))


def test_pauli_algebra():
    x, y, z = (LocalOperator.onsite((0,), PAULI[c]) for c in "xyz")
    assert commutator(x, y).allclose(z * 2j)
    assert (x @ x).allclose(LocalOperator.identity(chain(1)))
    assert op_norm(x + z) == pytest.approx(np.sqrt(2))


def test_disjoint_supports_commute(rng):
    a = LocalOperator.random(chain(2), rng)
    b = LocalOperator.random(chain(2, start=2), rng)
    assert op_norm(commutator(a, b)) < 1e-12


def test_translate_keeps_matrix(rng):
    a = LocalOperator.random(Volume([(0, 0), (0, 1), (1, 0)]), rng)
    t = translate_op(a, (3, -2))
    np.testing.assert_array_equal(a.matrix, t.matrix)
    assert t.support == Volume([(3, -2), (3, -1), (4, -2)])


@pytest.mark.parametrize("k", [2, 3])
def test_pauli_basis_orthonormal(k):
    ops = pauli_basis(chain(2), k)
    d = k**2
    G = np.array([[np.trace(a.matrix.conj().T @ b.matrix) / d for b in ops] for a in ops])
    np.testing.assert_allclose(G, np.eye(len(ops)), atol=1e-12)
    np.testing.assert_allclose(ops[0].matrix, np.eye(d))
    assert len(onsite_basis(k)) == k * k


def test_conditional_expectation_properties(rng):
    a = LocalOperator.random(chain(3), rng)
    sub = Volume([(0,), (2,)])
    e = conditional_expectation(a, sub)
    assert e.support == sub
    # trace preserving up to normalization and a bimodule map on the kept factor
    assert tracial_state(e) == pytest.approx(tracial_state(a))
    b = LocalOperator.random(sub, rng)
    left = conditional_expectation(b @ a, sub)
    assert left.allclose(b @ e, atol=1e-12)
    one = LocalOperator.identity(chain(3))
    assert conditional_expectation(one, sub).allclose(LocalOperator.identity(sub))


def test_partial_trace_against_einsum(rng):
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    st_ = StateFunctional.from_vector(chain(3), psi)
    red = st_.restrict(Volume([(0,), (2,)])).rho
    t = st_.rho.reshape(2, 2, 2, 2, 2, 2)
    ref = np.einsum("ajbcjd->abcd", t).reshape(4, 4)
    np.testing.assert_allclose(red, ref, atol=1e-14)


def test_state_evaluation_consistent_with_full_trace(rng):
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    s = StateFunctional.from_vector(chain(4), psi)
    a = LocalOperator.random(Volume([(1,), (3,)]), rng)
    full = np.trace(s.rho @ embed(a, chain(4)).matrix)
    assert s(a) == pytest.approx(full)


def test_state_validation():
    with pytest.raises(ConstructionError):
        StateFunctional(chain(1), np.diag([1.5, -0.5]))
    with pytest.raises(ConstructionError):
        StateFunctional(chain(1), np.diag([0.5, 0.6]))
    with pytest.raises(InputError):
        StateFunctional(chain(2), np.eye(2) / 2)


def test_product_state_and_mixture(rng):
    a = StateFunctional.from_vector(chain(1, start=2), [1, 0])
    b = StateFunctional.from_vector(chain(1), [0, 1])
    p = product_state([a, b])
    assert p.volume == Volume([(0,), (2,)])
    np.testing.assert_allclose(p.rho, np.kron(b.rho, a.rho))
    m = mix_states([a, StateFunctional.tracial(chain(1, start=2))], [0.5, 0.5])
    assert m(LocalOperator.onsite((2,), SIGMA_Z)) == pytest.approx(0.5)


def test_json_round_trip(rng):
    a = LocalOperator.random(ball((0, 0), 0), rng)
    b = LocalOperator.from_json(a.to_json())
    assert b.support == a.support
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_shape_checked():
    with pytest.raises(InputError):
        LocalOperator(chain(2), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.permutations([0, 1, 2, 3]), st.integers(0, 2**32 - 1))
def test_embedding_is_an_algebra_map(order, seed):
    r = np.random.default_rng(seed)
    sup = Volume([(order[0],), (order[1],)])
    a = LocalOperator.random(sup, r)
    b = LocalOperator.random(Volume([(order[1],), (order[2],)]), r)
    big = chain(4)
    lhs = embed(a @ b, big)
    rhs = LocalOperator(big, embed(a, big).matrix @ embed(b, big).matrix)
    assert lhs.allclose(rhs, atol=1e-10)
    assert embed(a, big).dag.allclose(embed(a.dag, big))
    assert op_norm(embed(a, big)) == pytest.approx(op_norm(a), rel=1e-10)
